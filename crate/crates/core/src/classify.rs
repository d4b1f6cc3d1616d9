//! Exhaustive enumeration of relative hemisystems.
//!
//! The kernel is an exact-cover style backtracker over the external lines: it branches on the
//! external point with the fewest completions, over all ways of choosing its missing member
//! lines among its undecided ones, and propagates the per-point bounds (a point with q/2
//! members forces its undecided lines out, one that needs all of them forces them in).
//! Subproblems from a fixed-depth split run in parallel; results are merged in split order.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collineation::Domain;
use crate::error::{Error, Result};
use crate::hemisystem::{image, line_set, set_orbit, verify, LineSet};
use crate::permgroup::{Group, OrbitDecomposition};
use crate::polar::Geometry;

const UNDECIDED: u8 = 0;
const IN: u8 = 1;
const OUT: u8 = 2;

#[derive(Clone)]
struct State<'a> {
    geom: &'a Geometry,
    half: u32,
    line: Vec<u8>,
    inn: Vec<u32>,
    und: Vec<u32>,
    trail: Vec<u32>,
}

impl<'a> State<'a> {
    fn new(geom: &'a Geometry) -> Self {
        let q = geom.q() as u32;
        State {
            geom,
            half: q / 2,
            line: vec![UNDECIDED; geom.ext_line_count()],
            inn: vec![0; geom.ext_point_count()],
            und: vec![q; geom.ext_point_count()],
            trail: Vec::new(),
        }
    }

    fn set(&mut self, l: u32, v: u8) {
        self.line[l as usize] = v;
        self.trail.push(l);
        for &x in self.geom.ext_line_points(l) {
            self.und[x as usize] -= 1;
            if v == IN {
                self.inn[x as usize] += 1;
            }
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let l = self.trail.pop().unwrap();
            let v = self.line[l as usize];
            self.line[l as usize] = UNDECIDED;
            for &x in self.geom.ext_line_points(l) {
                self.und[x as usize] += 1;
                if v == IN {
                    self.inn[x as usize] -= 1;
                }
            }
        }
    }

    /// Assigns `l` and closes under the forcing rules. False on contradiction.
    fn assign(&mut self, l: u32, v: u8) -> bool {
        match self.line[l as usize] {
            UNDECIDED => {}
            cur => return cur == v,
        }
        let mut queue = vec![(l, v)];
        while let Some((l, v)) = queue.pop() {
            match self.line[l as usize] {
                UNDECIDED => self.set(l, v),
                cur if cur == v => continue,
                _ => return false,
            }
            for &x in self.geom.ext_line_points(l) {
                let (i, u) = (self.inn[x as usize], self.und[x as usize]);
                if i > self.half || i + u < self.half {
                    return false;
                }
                if u > 0 && (i == self.half || i + u == self.half) {
                    let w = if i == self.half { OUT } else { IN };
                    for &m in self.geom.ext_point_lines(x) {
                        if self.line[m as usize] == UNDECIDED {
                            queue.push((m, w));
                        }
                    }
                }
            }
        }
        true
    }

    /// The point with fewest completions among those with undecided lines.
    fn branch_point(&self) -> Option<u32> {
        let mut best: Option<(u64, u32)> = None;
        for x in 0..self.inn.len() {
            let u = self.und[x];
            if u == 0 {
                continue;
            }
            let c = binom(u as u64, (self.half - self.inn[x]) as u64);
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, x as u32));
                if c <= 1 {
                    break;
                }
            }
        }
        best.map(|b| b.1)
    }

    /// Branches at `x`: each completion as a list of (line, value).
    fn completions(&self, x: u32) -> Vec<Vec<(u32, u8)>> {
        let free: Vec<u32> = self.geom.ext_point_lines(x).iter().copied().filter(|&l| self.line[l as usize] == UNDECIDED).collect();
        let need = (self.half - self.inn[x as usize]) as usize;
        let mut out = Vec::new();
        for mask in 0u32..1 << free.len() {
            if mask.count_ones() as usize == need {
                out.push(free.iter().enumerate().map(|(i, &l)| (l, if mask >> i & 1 == 1 { IN } else { OUT })).collect());
            }
        }
        out
    }

    fn apply(&mut self, moves: &[(u32, u8)]) -> bool {
        moves.iter().all(|&(l, v)| self.assign(l, v))
    }

    fn solution(&self) -> LineSet {
        let mut s = LineSet::with_capacity(self.line.len());
        for (l, &v) in self.line.iter().enumerate() {
            if v == IN {
                s.insert(l);
            }
        }
        s
    }
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub nodes: Option<u64>,
    pub seconds: Option<f64>,
}

/// Resumable state: solutions of the finished subproblems of a run with the given key.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub key: String,
    pub subproblems: usize,
    pub done: BTreeMap<usize, Vec<Vec<u32>>>,
    pub nodes: u64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub solutions: Vec<LineSet>,
    pub nodes: u64,
    pub complete: bool,
    pub checkpoint: Checkpoint,
}

struct Limits {
    nodes: AtomicU64,
    max_nodes: u64,
    deadline: Option<Instant>,
    stop: AtomicBool,
}

impl Limits {
    fn tick(&self) -> bool {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.max_nodes || self.deadline.is_some_and(|d| n.is_multiple_of(1024) && Instant::now() > d) {
            self.stop.store(true, Ordering::Relaxed);
        }
        !self.stop.load(Ordering::Relaxed)
    }
}

fn dfs(st: &mut State, limits: &Limits, out: &mut Vec<LineSet>) -> bool {
    if !limits.tick() {
        return false;
    }
    let Some(x) = st.branch_point() else {
        out.push(st.solution());
        return true;
    };
    for moves in st.completions(x) {
        let mark = st.trail.len();
        if st.apply(&moves) && !dfs(st, limits, out) {
            st.undo(mark);
            return false;
        }
        st.undo(mark);
    }
    true
}

/// Splits the search below the forced assignments into at least `target` subproblems (or
/// fewer if the tree is smaller), each given as its full list of moves.
fn split(base: &State, target: usize) -> Vec<Vec<(u32, u8)>> {
    let mut frontier: Vec<Vec<(u32, u8)>> = vec![Vec::new()];
    for _ in 0..6 {
        if frontier.len() >= target {
            break;
        }
        let mut next = Vec::new();
        let mut grew = false;
        for path in frontier {
            let mut st = base.clone();
            if !st.apply(&path) {
                continue;
            }
            match st.branch_point() {
                None => next.push(path),
                Some(x) => {
                    grew = true;
                    for c in st.completions(x) {
                        let mut p = path.clone();
                        p.extend(c);
                        next.push(p);
                    }
                }
            }
        }
        frontier = next;
        if !grew {
            break;
        }
    }
    frontier
}

/// Every relative hemisystem containing `forced_in` and disjoint from `forced_out`, in a
/// deterministic order independent of the worker count.
pub fn search(geom: &Geometry, forced_in: &[u32], forced_out: &[u32], budget: &Budget, resume: Option<&Checkpoint>) -> Result<SearchOutcome> {
    let key = format!("{}:{:?}:{:?}", geom.digest(), forced_in, forced_out);
    let mut base = State::new(geom);
    let consistent = forced_in.iter().all(|&l| base.assign(l, IN)) && forced_out.iter().all(|&l| base.assign(l, OUT));
    let subs = if consistent { split(&base, 64) } else { Vec::new() };
    let mut checkpoint = Checkpoint { version: 1, key: key.clone(), subproblems: subs.len(), ..Default::default() };
    if let Some(cp) = resume {
        if cp.key != key || cp.subproblems != subs.len() {
            return Err(Error::Format("checkpoint belongs to a different search".into()));
        }
        checkpoint.done = cp.done.clone();
        checkpoint.nodes = cp.nodes;
    }
    let limits = Limits {
        nodes: AtomicU64::new(0),
        max_nodes: budget.nodes.unwrap_or(u64::MAX),
        deadline: budget.seconds.map(|s| Instant::now() + Duration::from_secs_f64(s)),
        stop: AtomicBool::new(false),
    };
    let results: Vec<(usize, Option<Vec<LineSet>>)> = subs
        .par_iter()
        .enumerate()
        .filter(|(i, _)| !checkpoint.done.contains_key(i))
        .map(|(i, path)| {
            let mut st = base.clone();
            let mut out = Vec::new();
            if !st.apply(path) {
                return (i, Some(out));
            }
            let finished = dfs(&mut st, &limits, &mut out);
            (i, finished.then_some(out))
        })
        .collect();
    let mut complete = true;
    for (i, r) in results {
        match r {
            Some(sols) => {
                checkpoint.done.insert(i, sols.iter().map(|s| s.ones().map(|l| l as u32).collect()).collect());
            }
            None => complete = false,
        }
    }
    let nodes = limits.nodes.load(Ordering::Relaxed);
    checkpoint.nodes += nodes;
    let mut solutions = Vec::new();
    for sols in checkpoint.done.values() {
        for s in sols {
            solutions.push(line_set(geom, s.iter().copied())?);
        }
    }
    Ok(SearchOutcome { solutions, nodes: checkpoint.nodes, complete, checkpoint })
}

/// One E-class found by the symmetry-broken search.
#[derive(Clone, Debug)]
pub struct Class {
    pub representative: LineSet,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub classes: Vec<Class>,
    pub searched: usize,
    pub nodes: u64,
}

impl Classification {
    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.size).sum()
    }
}

/// One representative per E-class with class sizes. Every hemisystem is E-equivalent to one
/// containing the representative r of the first E-orbit on lines it meets and avoiding the
/// earlier orbits; below r the same is done with the orbits of E_r. The solutions of these
/// restricted searches are then grouped by explicit E-orbits (bounded by `orbit_bound`).
pub fn classify(geom: &Geometry, e: &Group, budget: &Budget, orbit_bound: usize) -> Result<Classification> {
    let perms = e.perms(geom, Domain::ExternalLines)?;
    let n = geom.ext_line_count();
    let top = OrbitDecomposition::from_perms(Domain::ExternalLines, n, &perms);
    let mut found: Vec<LineSet> = Vec::new();
    let mut nodes = 0;
    for (i, &r) in top.reps.iter().enumerate() {
        let earlier: Vec<u32> = (0..n as u32).filter(|&l| (top.orbit_of[l as usize] as usize) < i).collect();
        let stab = e.index_stabilizer(&perms, r)?;
        let sperms = stab.perms(geom, Domain::ExternalLines)?;
        let below = OrbitDecomposition::from_perms(Domain::ExternalLines, n, &sperms);
        let mut excluded = earlier.clone();
        for &s in &below.reps {
            if s == r || (top.orbit_of[s as usize] as usize) < i {
                continue;
            }
            let out = search(geom, &[r, s], &excluded, budget, None)?;
            nodes += out.nodes;
            if !out.complete {
                return Err(Error::Budget { nodes });
            }
            found.extend(out.solutions);
            excluded.extend(below.members(below.orbit_of[s as usize]));
        }
    }
    let searched = found.len();
    let mut index: HashMap<LineSet, bool> = found.iter().map(|s| (s.clone(), false)).collect();
    let mut classes = Vec::new();
    for s in &found {
        if index[s] {
            continue;
        }
        let (orbit, _) = set_orbit(&perms, s, orbit_bound)?;
        for t in &orbit {
            if let Some(v) = index.get_mut(t) {
                *v = true;
            }
        }
        classes.push(Class { representative: orbit.iter().min_by(|a, b| cmp_sets(a, b)).unwrap().clone(), size: orbit.len() });
    }
    classes.sort_by(|a, b| cmp_sets(&a.representative, &b.representative));
    Ok(Classification { classes, searched, nodes })
}

/// Lexicographic order on sorted index lists.
pub fn cmp_sets(a: &LineSet, b: &LineSet) -> std::cmp::Ordering {
    a.ones().cmp(b.ones())
}

/// Unions of S-orbits on ℒ_E that are relative hemisystems. One constraint per S-orbit on
/// 𝒫_E suffices, since line-orbit incidence numbers are constant on point orbits.
pub fn enumerate_invariant(geom: &Geometry, s: &Group, max_orbits: usize) -> Result<Vec<LineSet>> {
    let lperms = s.perms(geom, Domain::ExternalLines)?;
    let pperms = s.perms(geom, Domain::ExternalPoints)?;
    let lo = OrbitDecomposition::from_perms(Domain::ExternalLines, geom.ext_line_count(), &lperms);
    let po = OrbitDecomposition::from_perms(Domain::ExternalPoints, geom.ext_point_count(), &pperms);
    if lo.count() > max_orbits {
        return Err(Error::Parameter(format!("{} orbits on external lines exceed the bound {max_orbits}", lo.count())));
    }
    let rows: Vec<Vec<u32>> = po
        .reps
        .iter()
        .map(|&x| {
            let mut r = vec![0; lo.count()];
            for &l in geom.ext_point_lines(x) {
                r[lo.orbit_of[l as usize] as usize] += 1;
            }
            r
        })
        .collect();
    let half = geom.q() as u32 / 2;
    let mut picks = Vec::new();
    let mut choice = vec![false; lo.count()];
    let mut sum = vec![0u32; rows.len()];
    let mut rest: Vec<u32> = rows.iter().map(|r| r.iter().sum()).collect();
    invariant_dfs(&rows, half, 0, &mut choice, &mut sum, &mut rest, &mut picks);
    picks
        .into_iter()
        .map(|c| {
            let s = line_set(geom, (0..geom.ext_line_count() as u32).filter(|&l| c[lo.orbit_of[l as usize] as usize]))?;
            if !verify(geom, &s).ok {
                return Err(Error::Verification("an orbit union passed the row test but not the definition".into()));
            }
            Ok(s)
        })
        .collect()
}

fn invariant_dfs(rows: &[Vec<u32>], half: u32, j: usize, choice: &mut Vec<bool>, sum: &mut [u32], rest: &mut [u32], out: &mut Vec<Vec<bool>>) {
    if sum.iter().zip(rest.iter()).any(|(&s, &r)| s > half || s + r < half) {
        return;
    }
    if j == choice.len() {
        out.push(choice.clone());
        return;
    }
    for take in [false, true] {
        for (i, r) in rows.iter().enumerate() {
            rest[i] -= r[j];
            if take {
                sum[i] += r[j];
            }
        }
        choice[j] = take;
        invariant_dfs(rows, half, j + 1, choice, sum, rest, out);
        for (i, r) in rows.iter().enumerate() {
            rest[i] += r[j];
            if take {
                sum[i] -= r[j];
            }
        }
    }
    choice[j] = false;
}

/// Setwise stabiliser of a line set in `e`.
pub fn stabilizer_of(geom: &Geometry, lines: &LineSet, e: &Group, bound: usize) -> Result<Group> {
    let perms = e.perms(geom, Domain::ExternalLines)?;
    e.stabilizer_by_orbit(lines.clone(), |gi, s| image(&perms[gi], s), bound).map(|r| r.0)
}

/// LP model: one binary per external line, one equality per external point.
pub fn export_lp(geom: &Geometry, mut w: impl Write) -> Result<()> {
    let half = geom.q() / 2;
    writeln!(w, "\\ relative hemisystems of H(3,{}^2)", geom.q())?;
    writeln!(w, "Minimize\n obj: 0 l0\nSubject To")?;
    for x in 0..geom.ext_point_count() as u32 {
        let terms: Vec<String> = geom.ext_point_lines(x).iter().map(|l| format!("l{l}")).collect();
        writeln!(w, " p{x}: {} = {half}", terms.join(" + "))?;
    }
    writeln!(w, "Binary")?;
    for chunk in (0..geom.ext_line_count()).collect::<Vec<_>>().chunks(16) {
        let names: Vec<String> = chunk.iter().map(|l| format!("l{l}")).collect();
        writeln!(w, " {}", names.join(" "))?;
    }
    writeln!(w, "End")?;
    Ok(())
}

/// Reads "name value" lines (comments start with '#') and returns the lines set to 1.
pub fn import_solution(geom: &Geometry, r: impl BufRead) -> Result<LineSet> {
    let mut on = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::Format(format!("expected \"name value\", got {line:?}")));
        };
        let Some(idx) = name.strip_prefix('l').and_then(|s| s.parse::<u32>().ok()) else {
            continue;
        };
        let v: f64 = value.parse().map_err(|_| Error::Format(format!("bad value in {line:?}")))?;
        if v > 0.5 {
            on.push(idx);
        }
    }
    line_set(geom, on)
}
