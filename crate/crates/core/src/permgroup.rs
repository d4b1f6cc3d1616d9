//! Deterministic Schreier–Sims over collineations.
//!
//! Base points are projective points. The candidate list E₁..E₄, (1,1,1,1), (1,ω,0,0) with
//! ω primitive is a frame plus one Frobenius-moving point, so only the identity fixes all
//! of them and the chain is faithful on PG(3,q²). Orbits on the external points and lines
//! are computed from generator permutation images.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collineation::{perm_image, Collineation, Domain};
use crate::error::{Error, Result};
use crate::galois::{Elem, Field};
use crate::polar::Geometry;
use crate::projective::{Point, ProjectiveSpace};

#[derive(Clone)]
struct Level {
    base: u32,
    gens: Vec<Collineation>,
    orbit: Vec<u32>,
    pos: HashMap<u32, usize>,
    trans: Vec<Collineation>,
    trans_inv: Vec<Collineation>,
    /// Number of generators already paired with each orbit element as Schreier generators.
    tested: Vec<usize>,
}

#[derive(Clone)]
pub struct Group {
    space: ProjectiveSpace,
    candidates: Vec<u32>,
    gens: Vec<Collineation>,
    levels: Vec<Level>,
}

impl std::fmt::Debug for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Group(order {}, {} generators)", self.order(), self.gens.len())
    }
}

fn base_candidates(space: &ProjectiveSpace) -> Vec<u32> {
    let f = space.field();
    let o = Elem::ONE;
    let z = Elem::ZERO;
    let omega = f.elements().find(|&x| !x.is_zero() && f.multiplicative_order(x) == f.size() - 1).unwrap();
    [[o, z, z, z], [z, o, z, z], [z, z, o, z], [z, z, z, o], [o, o, o, o], [o, omega, z, z]]
        .iter()
        .map(|v| space.index_of(&Point(*v)))
        .collect()
}

impl Group {
    pub fn trivial(field: Arc<Field>) -> Group {
        let space = ProjectiveSpace::new(field);
        let candidates = base_candidates(&space);
        Group { space, candidates, gens: Vec::new(), levels: Vec::new() }
    }

    pub fn from_generators(field: Arc<Field>, gens: &[Collineation]) -> Group {
        let mut g = Group::trivial(field);
        for x in gens {
            g.extend(x);
        }
        g
    }

    /// Adds generators one at a time, skipping members, until the order reaches `target`.
    pub fn generate_until(field: Arc<Field>, gens: impl IntoIterator<Item = Collineation>, target: u128) -> Result<Group> {
        let mut g = Group::trivial(field);
        for x in gens {
            if g.order() >= target {
                break;
            }
            g.extend(&x);
        }
        if g.order() != target {
            return Err(Error::Group(format!("generated order {} instead of {target}", g.order())));
        }
        Ok(g)
    }

    pub fn field(&self) -> &Field {
        self.space.field()
    }

    pub fn field_arc(&self) -> &Arc<Field> {
        self.space.field_arc()
    }

    pub fn generators(&self) -> &[Collineation] {
        &self.gens
    }

    pub fn order(&self) -> u128 {
        self.levels.iter().map(|l| l.orbit.len() as u128).product()
    }

    pub fn base(&self) -> Vec<Point> {
        self.levels.iter().map(|l| self.space.point(l.base)).collect()
    }

    fn image(&self, x: &Collineation, p: u32) -> u32 {
        let f = self.space.field();
        self.space.index_of(&x.act_point(f, &self.space.point(p)))
    }

    /// Sifts `g` from level `start`; returns the residue and the level where it stopped.
    fn strip(&self, g: &Collineation, start: usize) -> (Collineation, usize) {
        let f = self.space.field();
        let mut h = *g;
        for (i, lvl) in self.levels.iter().enumerate().skip(start) {
            let b = self.image(&h, lvl.base);
            match lvl.pos.get(&b) {
                Some(&k) => h = h.then(f, &lvl.trans_inv[k]),
                None => return (h, i),
            }
        }
        (h, self.levels.len())
    }

    pub fn contains(&self, g: &Collineation) -> bool {
        let (h, _) = self.strip(g, 0);
        h.is_identity()
    }

    /// Adds `g` as a generator unless it is already a member. Returns whether the group grew.
    pub fn extend(&mut self, g: &Collineation) -> bool {
        let (h, j) = self.strip(g, 0);
        if h.is_identity() {
            return false;
        }
        self.gens.push(*g);
        self.add_strong(&h, j);
        self.close(j);
        true
    }

    fn add_strong(&mut self, h: &Collineation, upto: usize) {
        if upto == self.levels.len() {
            let b = *self
                .candidates
                .iter()
                .find(|&&c| self.image(h, c) != c)
                .expect("only the identity fixes every base candidate");
            self.levels.push(Level {
                base: b,
                gens: Vec::new(),
                orbit: vec![b],
                pos: HashMap::from([(b, 0)]),
                trans: vec![Collineation::identity()],
                trans_inv: vec![Collineation::identity()],
                tested: vec![0],
            });
        }
        for i in 0..=upto {
            self.add_level_gen(i, h);
        }
    }

    fn add_level_gen(&mut self, i: usize, x: &Collineation) {
        let space = self.space.clone();
        let f = space.field();
        let lvl = &mut self.levels[i];
        lvl.gens.push(*x);
        let mut k = 0;
        let old = lvl.orbit.len();
        while k < lvl.orbit.len() {
            let beta = lvl.orbit[k];
            let gens: &[Collineation] = if k < old { std::slice::from_ref(x) } else { &lvl.gens };
            let mut found = Vec::new();
            for y in gens {
                let gamma = space.index_of(&y.act_point(f, &space.point(beta)));
                if !lvl.pos.contains_key(&gamma) && !found.iter().any(|(g, _)| *g == gamma) {
                    found.push((gamma, lvl.trans[k].then(f, y)));
                }
            }
            for (gamma, u) in found {
                if lvl.pos.contains_key(&gamma) {
                    continue;
                }
                lvl.pos.insert(gamma, lvl.orbit.len());
                lvl.orbit.push(gamma);
                lvl.trans_inv.push(u.inverse(f));
                lvl.trans.push(u);
                lvl.tested.push(0);
            }
            k += 1;
        }
    }

    fn next_schreier(&mut self, i: usize) -> Option<Collineation> {
        let f = self.space.field_arc().clone();
        let ngens = self.levels[i].gens.len();
        for k in 0..self.levels[i].orbit.len() {
            let t = self.levels[i].tested[k];
            if t < ngens {
                self.levels[i].tested[k] = t + 1;
                let lvl = &self.levels[i];
                let x = lvl.gens[t];
                let u = lvl.trans[k].then(&f, &x);
                let img = self.image(&x, lvl.orbit[k]);
                let p = lvl.pos[&img];
                return Some(u.then(&f, &lvl.trans_inv[p]));
            }
        }
        None
    }

    fn close(&mut self, from: usize) {
        let mut i = from.min(self.levels.len() - 1) as isize;
        while i >= 0 {
            let lvl = i as usize;
            let mut descended = false;
            while let Some(s) = self.next_schreier(lvl) {
                let (h, j) = self.strip(&s, lvl + 1);
                if !h.is_identity() {
                    self.add_strong(&h, j);
                    i = j.min(self.levels.len() - 1) as isize;
                    descended = true;
                    break;
                }
            }
            if !descended {
                i -= 1;
            }
        }
    }

    /// All elements in breadth-first order from the identity over the generators.
    pub fn elements(&self, bound: usize) -> Result<Vec<Collineation>> {
        if self.order() > bound as u128 {
            return Err(Error::OrbitBound { bound });
        }
        let f = self.space.field();
        let mut seen = HashSet::from([Collineation::identity()]);
        let mut out = vec![Collineation::identity()];
        let mut k = 0;
        while k < out.len() {
            for x in &self.gens {
                let y = out[k].then(f, x);
                if seen.insert(y) {
                    out.push(y);
                }
            }
            k += 1;
        }
        Ok(out)
    }

    /// Smallest subgroup containing `gens` and normalised by this group.
    pub fn normal_closure(&self, gens: &[Collineation]) -> Group {
        let f = self.space.field();
        let mut n = Group::from_generators(self.field_arc().clone(), gens);
        loop {
            let before = n.order();
            let current = n.generators().to_vec();
            for y in &self.gens {
                let yi = y.inverse(f);
                for x in &current {
                    n.extend(&yi.then(f, x).then(f, y));
                }
            }
            if n.order() == before {
                return n;
            }
        }
    }

    /// Orbit of a PG point (as PG indices, in discovery order).
    pub fn point_orbit(&self, p: &Point) -> Vec<u32> {
        let start = self.space.index_of(p);
        let mut seen = HashMap::from([(start, ())]);
        let mut orbit = vec![start];
        let mut k = 0;
        while k < orbit.len() {
            for x in &self.gens {
                let y = self.image(x, orbit[k]);
                if seen.insert(y, ()).is_none() {
                    orbit.push(y);
                }
            }
            k += 1;
        }
        orbit
    }

    /// Stabiliser of an object under an action given per generator index. The orbit is
    /// enumerated with transversal elements; Schreier generators are added until the order
    /// reaches |G| / |orbit|.
    pub fn stabilizer_by_orbit<T, F>(&self, start: T, act: F, bound: usize) -> Result<(Group, usize)>
    where
        T: Hash + Eq + Clone,
        F: Fn(usize, &T) -> T,
    {
        let f = self.space.field();
        let mut pos: HashMap<T, usize> = HashMap::from([(start.clone(), 0)]);
        let mut orbit = vec![start];
        let mut trans = vec![Collineation::identity()];
        let mut k = 0;
        while k < orbit.len() {
            for (gi, x) in self.gens.iter().enumerate() {
                let y = act(gi, &orbit[k]);
                if !pos.contains_key(&y) {
                    if orbit.len() >= bound {
                        return Err(Error::OrbitBound { bound });
                    }
                    pos.insert(y.clone(), orbit.len());
                    trans.push(trans[k].then(f, x));
                    orbit.push(y);
                }
            }
            k += 1;
        }
        let n = orbit.len();
        let order = self.order();
        if !order.is_multiple_of(n as u128) {
            return Err(Error::Group(format!("orbit length {n} does not divide {order}")));
        }
        let target = order / n as u128;
        let mut stab = Group::trivial(self.field_arc().clone());
        'outer: for k in 0..n {
            if stab.order() == target {
                break;
            }
            for (gi, x) in self.gens.iter().enumerate() {
                let y = act(gi, &orbit[k]);
                let p = pos[&y];
                let s = trans[k].then(f, x).then(f, &trans[p].inverse(f));
                stab.extend(&s);
                if stab.order() == target {
                    break 'outer;
                }
            }
        }
        if stab.order() != target {
            return Err(Error::Group(format!("stabiliser order {} instead of {target}", stab.order())));
        }
        Ok((stab, n))
    }

    /// Stabiliser of a PG point.
    pub fn point_stabilizer(&self, p: &Point) -> Result<Group> {
        let start = self.space.index_of(p);
        let gens = self.gens.clone();
        self.stabilizer_by_orbit(start, |gi, &x| self.image(&gens[gi], x), usize::MAX).map(|r| r.0)
    }

    /// Stabiliser of a dense index of `domain`, using precomputed generator images.
    pub fn index_stabilizer(&self, perms: &[Vec<u32>], x: u32) -> Result<Group> {
        self.stabilizer_by_orbit(x, |gi, &y| perms[gi][y as usize], usize::MAX).map(|r| r.0)
    }

    pub fn perms(&self, geom: &Geometry, domain: Domain) -> Result<Vec<Vec<u32>>> {
        self.gens.par_iter().map(|g| perm_image(g, geom, domain)).collect()
    }

    pub fn orbits(&self, geom: &Geometry, domain: Domain) -> Result<OrbitDecomposition> {
        let perms = self.perms(geom, domain)?;
        let n = match domain {
            Domain::ExternalPoints => geom.ext_point_count(),
            Domain::ExternalLines => geom.ext_line_count(),
            Domain::SymplecticPoints => geom.symplectic_points().len(),
        };
        Ok(OrbitDecomposition::from_perms(domain, n, &perms))
    }

    pub fn to_cache(&self) -> GroupCache {
        let strong = self.levels.first().map(|l| l.gens.clone()).unwrap_or_default();
        GroupCache {
            version: 1,
            k: self.field().k(),
            generators: self.gens.clone(),
            base: self.base(),
            strong,
            order: self.order().to_string(),
        }
    }

    /// Rebuilds the chain from a stored base and strong generating set and checks the order.
    pub fn from_cache(field: Arc<Field>, cache: &GroupCache) -> Result<Group> {
        if field.k() != cache.k {
            return Err(Error::Format("group cache is for another field".into()));
        }
        let mut g = Group::trivial(field);
        g.gens = cache.generators.clone();
        for (i, b) in cache.base.iter().enumerate() {
            let bi = g.space.index_of(b);
            let fixed: Vec<u32> = g.levels.iter().map(|l| l.base).collect();
            g.levels.push(Level {
                base: bi,
                gens: Vec::new(),
                orbit: vec![bi],
                pos: HashMap::from([(bi, 0)]),
                trans: vec![Collineation::identity()],
                trans_inv: vec![Collineation::identity()],
                tested: vec![0],
            });
            for s in &cache.strong {
                if fixed.iter().all(|&p| g.image(s, p) == p) {
                    g.add_level_gen(i, s);
                }
            }
            let n = g.levels[i].tested.len();
            g.levels[i].tested = vec![g.levels[i].gens.len(); n];
        }
        if g.order().to_string() != cache.order {
            return Err(Error::Format(format!("cached order {} but chain gives {}", cache.order, g.order())));
        }
        if !cache.generators.iter().all(|x| g.contains(x)) {
            return Err(Error::Format("cached generators are not in the cached chain".into()));
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupCache {
    pub version: u32,
    pub k: u32,
    pub generators: Vec<Collineation>,
    pub base: Vec<Point>,
    pub strong: Vec<Collineation>,
    pub order: String,
}

/// Orbits of a permutation group on a dense domain; orbit ids are ordered by their
/// minimum element, which is the representative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitDecomposition {
    pub domain: Domain,
    pub orbit_of: Vec<u32>,
    pub reps: Vec<u32>,
    pub sizes: Vec<usize>,
}

impl OrbitDecomposition {
    pub fn from_perms(domain: Domain, n: usize, perms: &[Vec<u32>]) -> Self {
        let mut orbit_of = vec![u32::MAX; n];
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if orbit_of[s] != u32::MAX {
                continue;
            }
            let id = reps.len() as u32;
            reps.push(s as u32);
            orbit_of[s] = id;
            stack.push(s as u32);
            let mut size = 0;
            while let Some(x) = stack.pop() {
                size += 1;
                for p in perms {
                    let y = p[x as usize];
                    if orbit_of[y as usize] == u32::MAX {
                        orbit_of[y as usize] = id;
                        stack.push(y);
                    }
                }
            }
            sizes.push(size);
        }
        OrbitDecomposition { domain, orbit_of, reps, sizes }
    }

    pub fn count(&self) -> usize {
        self.reps.len()
    }

    pub fn members(&self, id: u32) -> Vec<u32> {
        (0..self.orbit_of.len() as u32).filter(|&x| self.orbit_of[x as usize] == id).collect()
    }
}
