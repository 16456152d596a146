//! Exhaustive checks of Beurling estimates on small connected sets.

use std::fmt;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::PhiSpec;
use crate::graph::{Family, Graph, GraphError, VertexId};
use crate::potential::{solve_escape, PotentialError, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeurlingError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Domain(String),
    #[error("enumeration stopped at the budget of {budget} sets (partial: {enumerated} enumerated)")]
    Budget { budget: u64, enumerated: u64 },
}

/// Default enumeration budget.
pub const DEFAULT_SET_BUDGET: u64 = 5_000_000;

/// Calls `visit` on every connected set of at most `max_size` vertices
/// containing the root, each exactly once, members in canonical order.
///
/// Sets are grown by Redelmeier's method: a vertex that has been offered
/// and declined at some level is never offered again below it, so no set is
/// generated twice. Returns the number of sets visited.
pub fn for_each_connected_set(
    g: &Graph,
    max_size: usize,
    budget: u64,
    mut visit: impl FnMut(&[VertexId]),
) -> Result<u64, BeurlingError> {
    if max_size == 0 {
        return Err(BeurlingError::Domain("max_size must be at least 1".into()));
    }
    let root = g.root().clone();
    let mut seen: FxHashSet<VertexId> = FxHashSet::default();
    seen.insert(root.clone());
    let mut untried = Vec::new();
    for w in g.neighbors(&root)? {
        seen.insert(w.clone());
        untried.push(w);
    }
    let mut state = Enum { g, max_size, budget, count: 0, set: vec![root], seen, sorted: Vec::new() };
    state.recurse(untried, &mut visit)?;
    Ok(state.count)
}

struct Enum<'a> {
    g: &'a Graph,
    max_size: usize,
    budget: u64,
    count: u64,
    set: Vec<VertexId>,
    seen: FxHashSet<VertexId>,
    sorted: Vec<VertexId>,
}

impl Enum<'_> {
    fn recurse(
        &mut self,
        mut untried: Vec<VertexId>,
        visit: &mut impl FnMut(&[VertexId]),
    ) -> Result<(), BeurlingError> {
        if self.count >= self.budget {
            return Err(BeurlingError::Budget { budget: self.budget, enumerated: self.count });
        }
        self.count += 1;
        self.sorted.clear();
        self.sorted.extend(self.set.iter().cloned());
        self.sorted.sort();
        visit(&self.sorted);
        if self.set.len() == self.max_size {
            return Ok(());
        }
        let mut nb = Vec::new();
        while let Some(v) = untried.pop() {
            nb.clear();
            self.g.push_neighbors(v.as_slice(), &mut nb);
            let fresh: Vec<VertexId> = nb.drain(..).filter(|w| !self.seen.contains(w)).collect();
            for w in &fresh {
                self.seen.insert(w.clone());
            }
            let mut next = untried.clone();
            next.extend(fresh.iter().cloned());
            self.set.push(v);
            let res = self.recurse(next, visit);
            self.set.pop();
            for w in &fresh {
                self.seen.remove(w);
            }
            res?;
        }
        Ok(())
    }
}

/// All connected sets of at most `max_size` vertices containing the root.
pub fn enumerate_connected_sets(g: &Graph, max_size: usize) -> Result<Vec<Vec<VertexId>>, BeurlingError> {
    let mut out = Vec::new();
    for_each_connected_set(g, max_size, DEFAULT_SET_BUDGET, |s| out.push(s.to_vec()))?;
    Ok(out)
}

/// Key under which two sets have the same harmonic measure profile.
///
/// On the full lattice this is the lexicographically least image under
/// translations and the signed coordinate permutations (for `d <= 4`);
/// elsewhere the set itself.
fn symmetry_key(g: &Graph, set: &[VertexId]) -> Vec<VertexId> {
    let d = match g.family() {
        Family::Lattice { d } if *d <= 4 => *d,
        _ => return set.to_vec(),
    };
    let mut perm: Vec<usize> = (0..d).collect();
    let mut best: Option<Vec<VertexId>> = None;
    let mut perms = Vec::new();
    permutations(&mut perm, 0, &mut perms);
    for p in &perms {
        for signs in 0..(1u32 << d) {
            let mut img: Vec<Vec<i32>> = set
                .iter()
                .map(|v| {
                    (0..d)
                        .map(|i| {
                            let c = v.as_slice()[p[i]];
                            if signs >> i & 1 == 1 {
                                -c
                            } else {
                                c
                            }
                        })
                        .collect()
                })
                .collect();
            for i in 0..d {
                let m = img.iter().map(|x| x[i]).min().unwrap_or(0);
                img.iter_mut().for_each(|x| x[i] -= m);
            }
            let mut img: Vec<VertexId> = img.into_iter().map(VertexId::from).collect();
            img.sort();
            if best.as_ref().is_none_or(|b| img < *b) {
                best = Some(img);
            }
        }
    }
    best.unwrap_or_default()
}

fn permutations(p: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, out);
        p.swap(k, i);
    }
}

/// Worst set for one size or radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstSet {
    pub key: u64,
    pub set: Vec<VertexId>,
    pub sup_h: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeurlingReport {
    pub family: String,
    pub max_size: usize,
    pub phi_volume: PhiSpec,
    pub phi_radius: PhiSpec,
    pub sets: u64,
    pub distinct_solves: u64,
    /// Sets whose solve failed; they are left out of every maximum.
    pub failed: u64,
    /// Sets with `sup h < 1/(D |A|)`, which would mean lost mass.
    pub floor_violations: u64,
    /// Sets whose solver run did not meet its convergence tolerance.
    pub unconverged: u64,
    pub per_size_worst: Vec<WorstSet>,
    pub per_radius_worst: Vec<WorstSet>,
    pub fitted_c_volume: f64,
    pub fitted_c_radius: f64,
}

/// Computes `sup_x h_A(x)` for every connected `A` of at most `max_size`
/// vertices containing the root and compares it with the unit-constant
/// forms of `phi_volume` at `|A|` and `phi_radius` at `max(rad A, 1)`.
///
/// Solves run in parallel; the reduction walks sets in enumeration order
/// and keeps the first strict maximum, so the report does not depend on
/// the number of workers.
pub fn beurling_report(
    g: &Graph,
    max_size: usize,
    phi_volume: &PhiSpec,
    phi_radius: &PhiSpec,
    cfg: &SolverConfig,
) -> Result<BeurlingReport, BeurlingError> {
    let bounds_err = |e: crate::bounds::BoundsError| BeurlingError::Domain(e.to_string());
    phi_volume.validate().map_err(bounds_err)?;
    phi_radius.validate().map_err(bounds_err)?;
    if !phi_volume.is_volume() || phi_radius.is_volume() {
        return Err(BeurlingError::Domain("expected a volume phi and a radius phi".into()));
    }
    cfg.validate().map_err(|e| BeurlingError::Domain(e.to_string()))?;

    let mut sets = Vec::new();
    let mut keys: FxHashMap<Vec<VertexId>, usize> = FxHashMap::default();
    let mut reps: Vec<Vec<VertexId>> = Vec::new();
    for_each_connected_set(g, max_size, DEFAULT_SET_BUDGET, |s| {
        let key = symmetry_key(g, s);
        let id = *keys.entry(key).or_insert_with(|| {
            reps.push(s.to_vec());
            reps.len() - 1
        });
        sets.push((s.to_vec(), id));
    })?;

    let solved: Vec<Result<(f64, bool), PotentialError>> =
        reps.par_iter().map(|a| solve_escape(g, a, cfg).map(|r| (r.max_harmonic(), r.converged))).collect();

    let vol_unit = phi_volume.unit();
    let rad_unit = phi_radius.unit();
    let max_deg = g.max_degree() as f64;
    let mut report = BeurlingReport {
        family: g.family().tag(),
        max_size,
        phi_volume: *phi_volume,
        phi_radius: *phi_radius,
        sets: sets.len() as u64,
        distinct_solves: reps.len() as u64,
        failed: 0,
        floor_violations: 0,
        unconverged: 0,
        per_size_worst: Vec::new(),
        per_radius_worst: Vec::new(),
        fitted_c_volume: 0.0,
        fitted_c_radius: 0.0,
    };
    let mut by_size: Vec<Option<WorstSet>> = vec![None; max_size + 1];
    let mut by_radius: Vec<Option<WorstSet>> = Vec::new();
    for (set, id) in sets {
        let (sup_h, converged) = match &solved[id] {
            Ok(v) => *v,
            Err(_) => {
                report.failed += 1;
                continue;
            }
        };
        if !converged {
            report.unconverged += 1;
        }
        let size = set.len();
        if sup_h < 1.0 / (max_deg * size as f64) {
            report.floor_violations += 1;
        }
        let mut rad = 0u64;
        for v in &set {
            rad = rad.max(g.dist_from_root(v)?);
        }
        let rv = sup_h / vol_unit.value(size as f64);
        let rr = sup_h / rad_unit.value(rad.max(1) as f64);
        report.fitted_c_volume = report.fitted_c_volume.max(rv);
        report.fitted_c_radius = report.fitted_c_radius.max(rr);
        if by_size[size].as_ref().is_none_or(|w| rv > w.ratio) {
            by_size[size] = Some(WorstSet { key: size as u64, set: set.clone(), sup_h, ratio: rv });
        }
        if by_radius.len() <= rad as usize {
            by_radius.resize(rad as usize + 1, None);
        }
        if by_radius[rad as usize].as_ref().is_none_or(|w| rr > w.ratio) {
            by_radius[rad as usize] = Some(WorstSet { key: rad, set, sup_h, ratio: rr });
        }
    }
    report.per_size_worst = by_size.into_iter().flatten().collect();
    report.per_radius_worst = by_radius.into_iter().flatten().collect();
    Ok(report)
}

impl fmt::Display for BeurlingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "family {}  max_size {}  sets {}  solves {}",
            self.family, self.max_size, self.sets, self.distinct_solves
        )?;
        writeln!(f, "phi_volume {}  phi_radius {}", self.phi_volume, self.phi_radius)?;
        writeln!(f, "{:>6} {:>12} {:>12}  worst set", "size", "sup h", "ratio")?;
        for w in &self.per_size_worst {
            writeln!(f, "{:>6} {:>12.6} {:>12.6}  {}", w.key, w.sup_h, w.ratio, fmt_set(&w.set))?;
        }
        writeln!(f, "{:>6} {:>12} {:>12}  worst set", "radius", "sup h", "ratio")?;
        for w in &self.per_radius_worst {
            writeln!(f, "{:>6} {:>12.6} {:>12.6}  {}", w.key, w.sup_h, w.ratio, fmt_set(&w.set))?;
        }
        writeln!(f, "fitted C (volume) {:.6}", self.fitted_c_volume)?;
        writeln!(f, "fitted C (radius) {:.6}", self.fitted_c_radius)?;
        write!(
            f,
            "failed {}  unconverged {}  floor violations {}",
            self.failed, self.unconverged, self.floor_violations
        )
    }
}

fn fmt_set(set: &[VertexId]) -> String {
    set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_by_size(g: &Graph, max: usize) -> Vec<u64> {
        let mut c = vec![0u64; max + 1];
        for_each_connected_set(g, max, u64::MAX, |s| c[s.len()] += 1).unwrap();
        c
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_by_size(&Graph::lattice(3).unwrap(), 2), vec![0, 1, 6]);
        assert_eq!(count_by_size(&Graph::regular_tree(3).unwrap(), 2), vec![0, 1, 3]);
        assert_eq!(count_by_size(&Graph::lattice(2).unwrap(), 3)[3], 18);
    }

    #[test]
    fn sets_are_distinct_connected_and_rooted() {
        let g = Graph::lattice(3).unwrap();
        let mut all = FxHashSet::default();
        for_each_connected_set(&g, 4, u64::MAX, |s| {
            assert!(s.contains(g.root()));
            assert!(crate::potential::is_connected(&g, s));
            assert!(all.insert(s.to_vec()));
        })
        .unwrap();
        assert_eq!(all.len(), 1 + 6 + 45 + 344);
    }

    #[test]
    fn budget_reports_partial_progress() {
        let g = Graph::lattice(3).unwrap();
        let err = for_each_connected_set(&g, 5, 100, |_| {}).unwrap_err();
        assert_eq!(err, BeurlingError::Budget { budget: 100, enumerated: 100 });
    }

    #[test]
    fn symmetry_key_identifies_rotated_sets() {
        let g = Graph::lattice(3).unwrap();
        let a = [VertexId::new(&[0, 0, 0]), VertexId::new(&[1, 0, 0])];
        let b = [VertexId::new(&[0, -1, 0]), VertexId::new(&[0, 0, 0])];
        let c = [VertexId::new(&[0, 0, 0]), VertexId::new(&[1, 0, 0]), VertexId::new(&[1, 1, 0])];
        assert_eq!(symmetry_key(&g, &a), symmetry_key(&g, &b));
        assert_ne!(symmetry_key(&g, &a), symmetry_key(&g, &c));
    }

    #[test]
    fn singleton_ratio_is_one() {
        let g = Graph::regular_tree(3).unwrap();
        let phi_v = PhiSpec::VolumeInverse { c: 1.0, beta: 0.0 };
        let phi_r = PhiSpec::RadiusPower { c: 1.0, alpha: 1.0 };
        let rep = beurling_report(&g, 3, &phi_v, &phi_r, &SolverConfig::default()).unwrap();
        assert_eq!(rep.per_size_worst[0].sup_h, 1.0);
        assert_eq!(rep.per_size_worst[0].ratio, 1.0);
        assert_eq!(rep.sets, 1 + 3 + 9);
        assert_eq!((rep.failed, rep.floor_violations, rep.unconverged), (0, 0, 0));
        // an edge {o, a} splits evenly by symmetry
        assert!((rep.per_size_worst[1].sup_h - 0.5).abs() < 1e-9);
    }
}
