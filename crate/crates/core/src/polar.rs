//! The Hermitian quadrangle H(3,q²) with form `x₁y₂^q + x₂y₁^q + x₃y₄^q + x₄y₃^q`, its
//! Baer subquadrangle W(3,q) (points with all canonical coordinates in GF(q)), and the
//! external points and lines used by every hemisystem computation.

use std::collections::HashMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::galois::{Elem, Field};
use crate::projective::{Line, Point, ProjectiveSpace, Vec4, ZERO4};

pub const NONE: u32 = u32::MAX;

/// Hermitian sesquilinear form, linear in `x` and semilinear in `y`.
pub fn hermitian_eval(f: &Field, x: &Vec4, y: &Vec4) -> Elem {
    f.mul(x[0], f.q_power(y[1])) + f.mul(x[1], f.q_power(y[0])) + f.mul(x[2], f.q_power(y[3])) + f.mul(x[3], f.q_power(y[2]))
}

/// Symplectic polar form of W(3,q); also the polar form of the hyperbolic quadric.
pub fn symplectic_eval(f: &Field, x: &Vec4, y: &Vec4) -> Elem {
    f.mul(x[0], y[1]) + f.mul(x[1], y[0]) + f.mul(x[2], y[3]) + f.mul(x[3], y[2])
}

pub fn is_baer(f: &Field, v: &Vec4) -> bool {
    v.iter().all(|&x| f.in_subfield(x))
}

/// H(3,q²) and W(3,q) with dense sub-indexing of external points and lines.
pub struct Geometry {
    space: ProjectiveSpace,
    herm_points: Vec<Point>,
    herm_index: Vec<u32>,
    baer: Vec<bool>,
    herm_lines: Vec<Line>,
    herm_line_points: Vec<u32>,
    herm_point_lines: Vec<u32>,
    line_lookup: HashMap<u64, u32>,
    symp_points: Vec<u32>,
    symp_lines: Vec<u32>,
    ext_points: Vec<u32>,
    ext_point_index: Vec<u32>,
    ext_lines: Vec<u32>,
    ext_line_index: Vec<u32>,
    ext_line_points: Vec<u32>,
    ext_point_lines: Vec<u32>,
}

impl Geometry {
    pub fn build(field: Arc<Field>) -> Result<Geometry> {
        let space = ProjectiveSpace::new(field.clone());
        let f = &*field;
        let mut herm_points = Vec::new();
        let mut herm_index = vec![NONE; space.point_count()];
        for i in 0..space.point_count() as u32 {
            let p = space.point(i);
            if hermitian_eval(f, &p.0, &p.0).is_zero() {
                herm_index[i as usize] = herm_points.len() as u32;
                herm_points.push(p);
            }
        }
        let mut lines = Vec::new();
        let mut line_lookup = HashMap::new();
        for p in &herm_points {
            for l in lines_through_isotropic(&space, &herm_index, p) {
                let key = l.key();
                if let std::collections::hash_map::Entry::Vacant(e) = line_lookup.entry(key) {
                    e.insert(lines.len() as u32);
                    lines.push(l);
                }
            }
        }
        // deterministic order: sort by canonical form
        lines.sort();
        let line_lookup: HashMap<u64, u32> = lines.iter().enumerate().map(|(i, l)| (l.key(), i as u32)).collect();
        let points_per_line = f.size() + 1;
        let mut herm_line_points = Vec::with_capacity(lines.len() * points_per_line);
        for l in &lines {
            for p in space.line_points(l) {
                let h = herm_index[space.index_of(&p) as usize];
                if h == NONE {
                    return Err(Error::Verification(format!("line {l:?} is not totally isotropic")));
                }
                herm_line_points.push(h);
            }
        }
        Self::assemble(space, herm_points, herm_index, lines, line_lookup, herm_line_points)
    }

    fn assemble(
        space: ProjectiveSpace,
        herm_points: Vec<Point>,
        herm_index: Vec<u32>,
        herm_lines: Vec<Line>,
        line_lookup: HashMap<u64, u32>,
        herm_line_points: Vec<u32>,
    ) -> Result<Geometry> {
        let f = space.field();
        let q = f.q();
        let ppl = f.size() + 1;
        let baer: Vec<bool> = herm_points.iter().map(|p| is_baer(f, &p.0)).collect();

        let mut buckets: Vec<Vec<u32>> = vec![Vec::with_capacity(q + 1); herm_points.len()];
        for (li, chunk) in herm_line_points.chunks(ppl).enumerate() {
            for &p in chunk {
                buckets[p as usize].push(li as u32);
            }
        }
        if buckets.iter().any(|b| b.len() != q + 1) {
            return Err(Error::Verification("a Hermitian point is not on q+1 lines".into()));
        }
        let herm_point_lines: Vec<u32> = buckets.into_iter().flatten().collect();

        let symp_points: Vec<u32> = (0..herm_points.len() as u32).filter(|&i| baer[i as usize]).collect();
        let mut symp_lines = Vec::new();
        let mut ext_lines = Vec::new();
        for (li, chunk) in herm_line_points.chunks(ppl).enumerate() {
            let nb = chunk.iter().filter(|&&p| baer[p as usize]).count();
            match nb {
                0 => ext_lines.push(li as u32),
                n if n == q + 1 => symp_lines.push(li as u32),
                n => return Err(Error::Verification(format!("line meets W(3,q) in {n} points"))),
            }
        }
        let ext_points: Vec<u32> = (0..herm_points.len() as u32).filter(|&i| !baer[i as usize]).collect();
        let mut ext_point_index = vec![NONE; herm_points.len()];
        for (i, &p) in ext_points.iter().enumerate() {
            ext_point_index[p as usize] = i as u32;
        }
        let mut ext_line_index = vec![NONE; herm_lines.len()];
        for (i, &l) in ext_lines.iter().enumerate() {
            ext_line_index[l as usize] = i as u32;
        }
        let mut ext_line_points = Vec::with_capacity(ext_lines.len() * ppl);
        let mut per_point: Vec<Vec<u32>> = vec![Vec::with_capacity(q); ext_points.len()];
        for (i, &l) in ext_lines.iter().enumerate() {
            for &p in &herm_line_points[l as usize * ppl..(l as usize + 1) * ppl] {
                let e = ext_point_index[p as usize];
                ext_line_points.push(e);
                per_point[e as usize].push(i as u32);
            }
        }
        if per_point.iter().any(|v| v.len() != q) {
            return Err(Error::Verification("an external point is not on q external lines".into()));
        }
        let ext_point_lines = per_point.into_iter().flatten().collect();
        Ok(Geometry {
            space,
            herm_points,
            herm_index,
            baer,
            herm_lines,
            herm_line_points,
            herm_point_lines,
            line_lookup,
            symp_points,
            symp_lines,
            ext_points,
            ext_point_index,
            ext_lines,
            ext_line_index,
            ext_line_points,
            ext_point_lines,
        })
    }

    pub fn field(&self) -> &Field {
        self.space.field()
    }

    pub fn field_arc(&self) -> &Arc<Field> {
        self.space.field_arc()
    }

    pub fn space(&self) -> &ProjectiveSpace {
        &self.space
    }

    pub fn q(&self) -> usize {
        self.field().q()
    }

    pub fn herm_point_count(&self) -> usize {
        self.herm_points.len()
    }

    pub fn herm_line_count(&self) -> usize {
        self.herm_lines.len()
    }

    pub fn herm_point(&self, i: u32) -> Point {
        self.herm_points[i as usize]
    }

    pub fn herm_line(&self, i: u32) -> Line {
        self.herm_lines[i as usize]
    }

    /// Hermitian sub-index of a point, if it is on H(3,q²).
    pub fn herm_index_of(&self, p: &Point) -> Option<u32> {
        let h = self.herm_index[self.space.index_of(p) as usize];
        (h != NONE).then_some(h)
    }

    pub fn herm_line_index(&self, l: &Line) -> Option<u32> {
        self.line_lookup.get(&l.key()).copied()
    }

    pub fn herm_line_points(&self, i: u32) -> &[u32] {
        let ppl = self.field().size() + 1;
        &self.herm_line_points[i as usize * ppl..(i as usize + 1) * ppl]
    }

    pub fn herm_point_lines(&self, i: u32) -> &[u32] {
        let d = self.q() + 1;
        &self.herm_point_lines[i as usize * d..(i as usize + 1) * d]
    }

    pub fn is_baer_point(&self, herm: u32) -> bool {
        self.baer[herm as usize]
    }

    pub fn symplectic_points(&self) -> &[u32] {
        &self.symp_points
    }

    pub fn symplectic_lines(&self) -> &[u32] {
        &self.symp_lines
    }

    pub fn ext_point_count(&self) -> usize {
        self.ext_points.len()
    }

    pub fn ext_line_count(&self) -> usize {
        self.ext_lines.len()
    }

    pub fn ext_point(&self, e: u32) -> Point {
        self.herm_points[self.ext_points[e as usize] as usize]
    }

    pub fn ext_line(&self, e: u32) -> Line {
        self.herm_lines[self.ext_lines[e as usize] as usize]
    }

    pub fn ext_point_index(&self, p: &Point) -> Option<u32> {
        let h = self.herm_index_of(p)?;
        let e = self.ext_point_index[h as usize];
        (e != NONE).then_some(e)
    }

    pub fn ext_line_index(&self, l: &Line) -> Option<u32> {
        let h = self.herm_line_index(l)?;
        let e = self.ext_line_index[h as usize];
        (e != NONE).then_some(e)
    }

    /// External points (sub-indices) of an external line.
    pub fn ext_line_points(&self, e: u32) -> &[u32] {
        let ppl = self.field().size() + 1;
        &self.ext_line_points[e as usize * ppl..(e as usize + 1) * ppl]
    }

    /// The q external lines through an external point.
    pub fn ext_point_lines(&self, e: u32) -> &[u32] {
        let q = self.q();
        &self.ext_point_lines[e as usize * q..(e as usize + 1) * q]
    }

    pub fn incident(&self, ext_line: u32, ext_point: u32) -> bool {
        self.ext_point_lines(ext_point).contains(&ext_line)
    }

    /// SHA-256 over the canonical external point and line tables.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let f = self.field();
        h.update(f.k().to_le_bytes());
        h.update(f.modulus_q2().to_le_bytes());
        for p in &self.ext_points {
            h.update(self.space.index_of(&self.herm_points[*p as usize]).to_le_bytes());
        }
        for l in &self.ext_lines {
            h.update(self.herm_lines[*l as usize].key().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Incidence structure of H(3,q²) on Hermitian sub-indices.
    pub fn hermitian_incidence(&self) -> IncidenceStructure {
        let ppl = self.field().size() + 1;
        IncidenceStructure {
            n_points: self.herm_point_count(),
            lines: self.herm_line_points.chunks(ppl).map(|c| c.to_vec()).collect(),
        }
    }

    /// Incidence structure of W(3,q), points re-indexed densely over the Baer points.
    pub fn symplectic_incidence(&self) -> IncidenceStructure {
        let mut local = HashMap::new();
        for (i, &p) in self.symp_points.iter().enumerate() {
            local.insert(p, i as u32);
        }
        let lines = self
            .symp_lines
            .iter()
            .map(|&l| self.herm_line_points(l).iter().filter_map(|p| local.get(p).copied()).collect())
            .collect();
        IncidenceStructure { n_points: self.symp_points.len(), lines }
    }

    /// Cache tables: Hermitian points by global index and lines by canonical rows.
    pub fn to_cache(&self) -> GeometryCache {
        GeometryCache {
            version: 1,
            field: self.field().to_json(),
            hermitian_points: self.herm_points.iter().map(|p| self.space.index_of(p)).collect(),
            hermitian_lines: self.herm_lines.iter().map(|l| l.rows().map(|r| r.map(|x| x.0))).collect(),
            line_points: self.herm_line_points.clone(),
            digest: self.digest(),
        }
    }

    pub fn from_cache(cache: &GeometryCache) -> Result<Geometry> {
        if cache.version != 1 {
            return Err(Error::Format(format!("unsupported geometry cache version {}", cache.version)));
        }
        let field = Arc::new(Field::from_json(&cache.field)?);
        let space = ProjectiveSpace::new(field.clone());
        let mut herm_index = vec![NONE; space.point_count()];
        let mut herm_points = Vec::with_capacity(cache.hermitian_points.len());
        for (i, &g) in cache.hermitian_points.iter().enumerate() {
            if g as usize >= herm_index.len() {
                return Err(Error::Format("point index out of range".into()));
            }
            herm_index[g as usize] = i as u32;
            herm_points.push(space.point(g));
        }
        let mut herm_lines = Vec::with_capacity(cache.hermitian_lines.len());
        for rows in &cache.hermitian_lines {
            let [a, b] = rows.map(|r| r.map(Elem));
            herm_lines.push(space.line_from_rows(a, b)?);
        }
        let mut line_points = Vec::with_capacity(cache.line_points.len());
        for l in &herm_lines {
            for p in space.line_points(l) {
                line_points.push(herm_index[space.index_of(&p) as usize]);
            }
        }
        if line_points != cache.line_points {
            return Err(Error::Format("cached line point table does not match the line spans".into()));
        }
        let line_lookup = herm_lines.iter().enumerate().map(|(i, l)| (l.key(), i as u32)).collect();
        let geom = Self::assemble(space, herm_points, herm_index, herm_lines, line_lookup, line_points)?;
        if geom.digest() != cache.digest {
            return Err(Error::Format("geometry cache digest mismatch".into()));
        }
        Ok(geom)
    }

    /// Checks every count invariant of the bundle.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let q = self.q();
        let checks = [
            ("hermitian points", self.herm_point_count(), (q * q + 1) * (q * q * q + 1)),
            ("hermitian lines", self.herm_line_count(), (q + 1) * (q * q * q + 1)),
            ("symplectic points", self.symp_points.len(), (q + 1) * (q * q + 1)),
            ("symplectic lines", self.symp_lines.len(), (q + 1) * (q * q + 1)),
            ("external points", self.ext_point_count(), q * (q * q - 1) * (q * q + 1)),
            ("external lines", self.ext_line_count(), q * q * (q * q - 1)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(format!("{name}: {got} != {want}"));
            }
        }
        for e in 0..self.ext_point_count() as u32 {
            if self.ext_point_lines(e).len() != q {
                return Err(format!("external point {e} is not on q external lines"));
            }
        }
        Ok(())
    }
}

/// The q+1 totally isotropic lines through an isotropic point `p`: each meets a fixed line
/// of the plane p^⊥ not through p in a Hermitian point.
fn lines_through_isotropic(space: &ProjectiveSpace, herm_index: &[u32], p: &Point) -> Vec<Line> {
    let f = space.field();
    // h(x, p) = c · x
    let c = [f.q_power(p.0[1]), f.q_power(p.0[0]), f.q_power(p.0[3]), f.q_power(p.0[2])];
    let j = c.iter().position(|x| !x.is_zero()).expect("nonzero functional");
    let mut kernel: Vec<(usize, Vec4)> = Vec::with_capacity(3);
    for i in (0..4).filter(|&i| i != j) {
        let mut w = ZERO4;
        w[i] = Elem::ONE;
        w[j] = f.div(c[i], c[j]);
        kernel.push((i, w));
    }
    // p = Σ p_i w_i over i ≠ j; drop one w_i with p_i ≠ 0 to get a complement of p
    let drop = kernel.iter().position(|(i, _)| !p.0[*i].is_zero()).expect("p lies in its own perp");
    kernel.remove(drop);
    let transversal = space.line_from_rows(kernel[0].1, kernel[1].1).expect("independent kernel vectors");
    space
        .line_points(&transversal)
        .into_iter()
        .filter(|x| herm_index[space.index_of(x) as usize] != NONE)
        .map(|x| space.line_through(p, &x).expect("x is off the line's complement of p"))
        .collect()
}

/// Serialized geometry tables, keyed by digest.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GeometryCache {
    pub version: u32,
    pub field: crate::galois::FieldCtxJson,
    pub hermitian_points: Vec<u32>,
    pub hermitian_lines: Vec<[[u8; 4]; 2]>,
    pub line_points: Vec<u32>,
    pub digest: String,
}

/// A finite point-line incidence structure.
#[derive(Debug, Clone)]
pub struct IncidenceStructure {
    pub n_points: usize,
    pub lines: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomResult {
    pub passed: bool,
    pub witness: Option<String>,
}

impl AxiomResult {
    fn pass() -> Self {
        AxiomResult { passed: true, witness: None }
    }
    fn fail(w: String) -> Self {
        AxiomResult { passed: false, witness: Some(w) }
    }
}

/// Per-axiom outcome of [`verify_gq_axioms`].
#[derive(Debug, Clone)]
pub struct GqReport {
    pub at_most_one_line: AxiomResult,
    pub lines_per_point: AxiomResult,
    pub points_per_line: AxiomResult,
    pub unique_collinear_point: AxiomResult,
}

impl GqReport {
    pub fn passed(&self) -> bool {
        self.at_most_one_line.passed && self.lines_per_point.passed && self.points_per_line.passed && self.unique_collinear_point.passed
    }
}

/// Exhaustively checks the four generalised quadrangle axioms for order (s,t).
pub fn verify_gq_axioms(inc: &IncidenceStructure, s: usize, t: usize) -> GqReport {
    let n = inc.n_points;
    let words = n.div_ceil(64);
    let mut collinear = vec![0u64; n * words];
    let mut degree = vec![0usize; n];
    let mut at_most_one = AxiomResult::pass();
    let mut points_per_line = AxiomResult::pass();
    for (li, line) in inc.lines.iter().enumerate() {
        if line.len() != s + 1 && points_per_line.passed {
            points_per_line = AxiomResult::fail(format!("line {li} has {} points", line.len()));
        }
        for &a in line {
            degree[a as usize] += 1;
            for &b in line {
                if a == b {
                    continue;
                }
                let slot = &mut collinear[a as usize * words + b as usize / 64];
                let bit = 1u64 << (b % 64);
                if *slot & bit != 0 && at_most_one.passed && a < b {
                    at_most_one = AxiomResult::fail(format!("points {a},{b} share two lines"));
                }
                *slot |= bit;
            }
        }
    }
    let lines_per_point = match degree.iter().position(|&d| d != t + 1) {
        Some(p) => AxiomResult::fail(format!("point {p} is on {} lines", degree[p])),
        None => AxiomResult::pass(),
    };
    let mut unique = AxiomResult::pass();
    'outer: for p in 0..n {
        let row = &collinear[p * words..(p + 1) * words];
        for (li, line) in inc.lines.iter().enumerate() {
            if line.contains(&(p as u32)) {
                continue;
            }
            let hits = line.iter().filter(|&&x| row[x as usize / 64] >> (x % 64) & 1 == 1).count();
            if hits != 1 {
                unique = AxiomResult::fail(format!("point {p} and line {li}: {hits} collinear points"));
                break 'outer;
            }
        }
    }
    GqReport { at_most_one_line: at_most_one, lines_per_point, points_per_line, unique_collinear_point: unique }
}
