use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GraphError;

/// Graph family selector. The text form is `z<d>`, `tree<k>`, `carpet<n>`
/// or `perc:<d>:<p>:<box>:<seed>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Lattice { d: usize },
    RegularTree { k: usize },
    Carpet { n: usize },
    Percolation { d: usize, p: f64, box_radius: i32, seed: u64 },
}

impl Family {
    /// Short tag used in reports and CSV summaries.
    pub fn tag(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Lattice { d } => write!(f, "z{d}"),
            Family::RegularTree { k } => write!(f, "tree{k}"),
            Family::Carpet { n } => write!(f, "carpet{n}"),
            Family::Percolation { d, p, box_radius, seed } => write!(f, "perc:{d}:{p}:{box_radius}:{seed}"),
        }
    }
}

fn parse_num<T: FromStr>(s: &str, whole: &str, what: &str) -> Result<T, GraphError> {
    s.parse().map_err(|_| GraphError::Parse(whole.to_string(), format!("bad {what} {s:?}")))
}

impl FromStr for Family {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("perc:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 4 {
                return Err(GraphError::Parse(s.into(), "expected perc:<d>:<p>:<box>:<seed>".into()));
            }
            return Ok(Family::Percolation {
                d: parse_num(parts[0], s, "dimension")?,
                p: parse_num(parts[1], s, "probability")?,
                box_radius: parse_num(parts[2], s, "box radius")?,
                seed: parse_num(parts[3], s, "seed")?,
            });
        }
        if let Some(rest) = t.strip_prefix("tree") {
            return Ok(Family::RegularTree { k: parse_num(rest, s, "degree")? });
        }
        if let Some(rest) = t.strip_prefix("carpet") {
            return Ok(Family::Carpet { n: parse_num(rest, s, "dimension")? });
        }
        if let Some(rest) = t.strip_prefix('z') {
            return Ok(Family::Lattice { d: parse_num(rest, s, "dimension")? });
        }
        Err(GraphError::Parse(s.into(), "unknown family".into()))
    }
}
