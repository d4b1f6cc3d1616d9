//! Semilinear collineations x ↦ x^{2^e}·A of PG(3,q²), acting on row vectors from the
//! right, and the named elements of the three constructions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galois::{Elem, Field};
use crate::polar::Geometry;
use crate::projective::{canonical_line, canonical_point, Line, Point, Vec4};
use crate::quadric::{QuadraticForm, Quadric, Side, MONOMIALS};

pub type Mat4 = [[Elem; 4]; 4];

pub fn identity_mat() -> Mat4 {
    let mut m = [[Elem::ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Elem::ONE;
    }
    m
}

pub fn mat_from_bits(rows: [[u8; 4]; 4]) -> Mat4 {
    rows.map(|r| r.map(Elem))
}

pub fn vec_mat(f: &Field, x: &Vec4, m: &Mat4) -> Vec4 {
    let mut out = [Elem::ZERO; 4];
    for (i, &xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for j in 0..4 {
            out[j] += f.mul(xi, m[i][j]);
        }
    }
    out
}

pub fn mat_mul(f: &Field, a: &Mat4, b: &Mat4) -> Mat4 {
    [vec_mat(f, &a[0], b), vec_mat(f, &a[1], b), vec_mat(f, &a[2], b), vec_mat(f, &a[3], b)]
}

pub fn mat_inverse(f: &Field, a: &Mat4) -> Option<Mat4> {
    let mut m = *a;
    let mut inv = identity_mat();
    for col in 0..4 {
        let piv = (col..4).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        inv.swap(col, piv);
        let s = f.inv(m[col][col]);
        for j in 0..4 {
            m[col][j] = f.mul(m[col][j], s);
            inv[col][j] = f.mul(inv[col][j], s);
        }
        for r in 0..4 {
            if r != col && !m[r][col].is_zero() {
                let c = m[r][col];
                for j in 0..4 {
                    let (mc, ic) = (m[col][j], inv[col][j]);
                    m[r][j] += f.mul(c, mc);
                    inv[r][j] += f.mul(c, ic);
                }
            }
        }
    }
    Some(inv)
}

fn twist_mat(f: &Field, m: &Mat4, e: u32) -> Mat4 {
    if e == 0 {
        return *m;
    }
    m.map(|r| r.map(|x| f.frobenius(x, e)))
}

fn normalize_mat(f: &Field, m: &Mat4) -> Mat4 {
    let lead = m.iter().flatten().find(|x| !x.is_zero()).copied().unwrap_or(Elem::ONE);
    if lead == Elem::ONE {
        return *m;
    }
    let s = f.inv(lead);
    m.map(|r| r.map(|x| f.mul(x, s)))
}

/// (A, e) acting as x ↦ x^{2^e}·A. The matrix is stored scaled so its first nonzero entry is 1.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Collineation {
    mat: Mat4,
    frob: u32,
}

impl std::fmt::Debug for Collineation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<Vec<u8>> = self.mat.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
        write!(f, "Col({rows:?}, frob {})", self.frob)
    }
}

impl Collineation {
    pub fn new(f: &Field, mat: Mat4, frob: u32) -> Result<Self> {
        if mat_inverse(f, &mat).is_none() {
            return Err(Error::Parameter("singular matrix".into()));
        }
        Ok(Collineation { mat: normalize_mat(f, &mat), frob: frob % f.degree() })
    }

    pub fn identity() -> Self {
        Collineation { mat: identity_mat(), frob: 0 }
    }

    pub fn mat(&self) -> &Mat4 {
        &self.mat
    }

    pub fn frob(&self) -> u32 {
        self.frob
    }

    pub fn is_identity(&self) -> bool {
        self.frob == 0 && self.mat == identity_mat()
    }

    pub fn apply(&self, f: &Field, x: &Vec4) -> Vec4 {
        let y = if self.frob == 0 { *x } else { x.map(|c| f.frobenius(c, self.frob)) };
        vec_mat(f, &y, &self.mat)
    }

    pub fn act_point(&self, f: &Field, p: &Point) -> Point {
        canonical_point(f, &self.apply(f, &p.0)).expect("collineations are invertible")
    }

    pub fn act_line(&self, f: &Field, l: &Line) -> Line {
        let [a, b] = l.rows();
        canonical_line(f, &self.apply(f, &a), &self.apply(f, &b)).expect("collineations are invertible")
    }

    /// `self` followed by `other`.
    pub fn then(&self, f: &Field, other: &Collineation) -> Collineation {
        let a = twist_mat(f, &self.mat, other.frob);
        Collineation { mat: normalize_mat(f, &mat_mul(f, &a, &other.mat)), frob: (self.frob + other.frob) % f.degree() }
    }

    pub fn inverse(&self, f: &Field) -> Collineation {
        let inv = mat_inverse(f, &self.mat).expect("stored matrices are invertible");
        let back = (f.degree() - self.frob) % f.degree();
        Collineation { mat: normalize_mat(f, &twist_mat(f, &inv, back)), frob: back }
    }

    pub fn pow(&self, f: &Field, mut n: u64) -> Collineation {
        let mut base = *self;
        let mut acc = Collineation::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.then(f, &base);
            }
            base = base.then(f, &base);
            n >>= 1;
        }
        acc
    }

    pub fn order(&self, f: &Field) -> u64 {
        let mut x = *self;
        let mut n = 1;
        while !x.is_identity() {
            x = x.then(f, self);
            n += 1;
        }
        n
    }

    /// Image of the Hermitian form x·H·ȳᵀ: the map is a similarity iff A·H·Āᵀ = λH.
    pub fn preserves_hermitian(&self, f: &Field) -> bool {
        let h = gram();
        let abar = twist_mat(f, &self.mat, f.k());
        similar_gram(f, &self.mat, &abar, &h)
    }

    /// Stabilises the Baer subgeometry and the symplectic polarity there.
    pub fn preserves_symplectic(&self, f: &Field) -> bool {
        self.mat.iter().flatten().all(|&x| f.in_subfield(x)) && similar_gram(f, &self.mat, &self.mat, &gram())
    }

    /// Form whose zero set is the image of the zero set of `form`: Q'(y) = Q^{σ^e}(y·A⁻¹).
    pub fn pushforward_form(&self, f: &Field, form: &QuadraticForm) -> QuadraticForm {
        let r = form.twisted(f, self.frob);
        let inv = mat_inverse(f, &self.mat).expect("stored matrices are invertible");
        let mut c = [Elem::ZERO; 10];
        for (slot, &(a, b)) in MONOMIALS.iter().enumerate() {
            c[slot] = if a == b { r.eval(f, &inv[a]) } else { r.polar(f, &inv[a], &inv[b]) };
        }
        QuadraticForm::new(c).normalized(f)
    }

    pub fn stabilises_form(&self, f: &Field, form: &QuadraticForm) -> bool {
        self.pushforward_form(f, form) == form.normalized(f)
    }

    pub fn regulus_action(&self, f: &Field, quad: &Quadric) -> ReguliAction {
        if !self.stabilises_form(f, quad.form()) {
            return ReguliAction::MovesQuadric;
        }
        let l = quad.regulus(0).lines()[0];
        match quad.side(&self.act_line(f, &l)) {
            Side::First => ReguliAction::Fixes,
            Side::Second => ReguliAction::Swaps,
            Side::NotOnQuadric => ReguliAction::MovesQuadric,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReguliAction {
    Fixes,
    Swaps,
    MovesQuadric,
}

/// The common Gram matrix of the Hermitian and symplectic forms.
fn gram() -> Mat4 {
    mat_from_bits([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
}

fn similar_gram(f: &Field, a: &Mat4, b: &Mat4, h: &Mat4) -> bool {
    let ah = mat_mul(f, a, h);
    let mut prod = [[Elem::ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            prod[i][j] = (0..4).fold(Elem::ZERO, |acc, t| acc + f.mul(ah[i][t], b[j][t]));
        }
    }
    let lam = prod[0][1];
    !lam.is_zero() && (0..4).all(|i| (0..4).all(|j| prod[i][j] == f.mul(lam, h[i][j])))
}

/// Named elements. Generic matrices from the PSL(2,q) family are built by [`j_element`].
pub mod named {
    use super::*;

    pub fn g(f: &Field) -> Collineation {
        Collineation::new(f, mat_from_bits([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), 0).unwrap()
    }

    /// (x₁+x₂, x₂, x₃, x₄).
    pub fn tau(f: &Field) -> Collineation {
        Collineation::new(f, mat_from_bits([[1, 0, 0, 0], [1, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]), 0).unwrap()
    }

    /// Coordinatewise x ↦ x^q.
    pub fn phi(f: &Field) -> Collineation {
        Collineation::new(f, identity_mat(), f.k()).unwrap()
    }

    /// The involution t exchanging the two Penttila–Williford hemisystems.
    pub fn t(f: &Field) -> Collineation {
        phi(f)
    }

    /// (x₂^q, x₁^q, x₄^q, x₃^q).
    pub fn z(f: &Field) -> Collineation {
        Collineation::new(f, mat_from_bits([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), f.k()).unwrap()
    }

    pub fn m(f: &Field) -> Collineation {
        Collineation::new(f, mat_from_bits([[1, 0, 1, 1], [0, 1, 1, 1], [1, 1, 1, 0], [1, 1, 0, 1]]), f.k()).unwrap()
    }

    /// D·τ with D = J(1,0,1,1).
    pub fn c(f: &Field) -> Collineation {
        Collineation::new(f, mat_from_bits([[1, 0, 0, 0], [1, 1, 1, 0], [0, 0, 1, 0], [1, 0, 1, 1]]), 0).unwrap()
    }

    pub fn d(f: &Field) -> Collineation {
        j_element(f, Elem::ONE, Elem::ZERO, Elem::ONE, Elem::ONE).unwrap()
    }

    /// B·φ with B = J(1,1,0,1).
    pub fn a(f: &Field) -> Collineation {
        let b = j_element(f, Elem::ONE, Elem::ONE, Elem::ZERO, Elem::ONE).unwrap();
        b.then(f, &phi(f))
    }

    pub fn b(f: &Field) -> Collineation {
        j_element(f, Elem::ONE, Elem::ONE, Elem::ZERO, Elem::ONE).unwrap()
    }

    /// Rows (1,0,0,0), (√(bf)+1, 1, √(be), √(cf)), (√(bc), 0, b, c), (√(ef), 0, e, f).
    pub fn j_element(f: &Field, b: Elem, c: Elem, e: Elem, ff: Elem) -> Result<Collineation> {
        if ![b, c, e, ff].iter().all(|&x| f.in_subfield(x)) {
            return Err(Error::Parameter("J parameters must lie in GF(q)".into()));
        }
        if f.mul(b, ff) + f.mul(c, e) != Elem::ONE {
            return Err(Error::Parameter("J parameters need bf + ce = 1".into()));
        }
        let s = |x: Elem| f.sqrt(x);
        let m = [
            [Elem::ONE, Elem::ZERO, Elem::ZERO, Elem::ZERO],
            [s(f.mul(b, ff)) + Elem::ONE, Elem::ONE, s(f.mul(b, e)), s(f.mul(c, ff))],
            [s(f.mul(b, c)), Elem::ZERO, b, c],
            [s(f.mul(e, ff)), Elem::ZERO, e, ff],
        ];
        Collineation::new(f, m, 0)
    }

    /// The stabiliser of the line x₂ = x₄ = 0 in J: M_{b,e} = J(b, 0, e, 1/b).
    pub fn m_be(f: &Field, b: Elem, e: Elem) -> Result<Collineation> {
        if b.is_zero() {
            return Err(Error::Parameter("M(b,e) needs b ≠ 0".into()));
        }
        j_element(f, b, Elem::ZERO, e, f.inv(b))
    }

    pub fn by_name(f: &Field, name: &str) -> Result<Collineation> {
        Ok(match name {
            "g" => g(f),
            "tau" => tau(f),
            "phi" => phi(f),
            "t" => t(f),
            "z" => z(f),
            "m" => m(f),
            "C" => c(f),
            "D" => d(f),
            "A" => a(f),
            "B" => b(f),
            _ => return Err(Error::Parameter(format!("unknown element {name}"))),
        })
    }
}

/// Domains of the induced permutation actions.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    ExternalPoints,
    ExternalLines,
    SymplecticPoints,
}

/// The permutation induced on a dense sub-index; fails with a witness when the domain is
/// not stabilised.
pub fn perm_image(g: &Collineation, geom: &Geometry, domain: Domain) -> Result<Vec<u32>> {
    let f = geom.field();
    match domain {
        Domain::ExternalPoints => (0..geom.ext_point_count() as u32)
            .map(|e| {
                let p = g.act_point(f, &geom.ext_point(e));
                geom.ext_point_index(&p).ok_or_else(|| Error::NotStabilised(format!("external point {e} maps to {p:?}")))
            })
            .collect(),
        Domain::ExternalLines => (0..geom.ext_line_count() as u32)
            .map(|e| {
                let l = g.act_line(f, &geom.ext_line(e));
                geom.ext_line_index(&l).ok_or_else(|| Error::NotStabilised(format!("external line {e} maps to {l:?}")))
            })
            .collect(),
        Domain::SymplecticPoints => {
            let pts = geom.symplectic_points();
            let mut pos = vec![u32::MAX; geom.herm_point_count()];
            for (i, &h) in pts.iter().enumerate() {
                pos[h as usize] = i as u32;
            }
            pts.iter()
                .map(|&h| {
                    let p = g.act_point(f, &geom.herm_point(h));
                    geom.herm_index_of(&p)
                        .map(|i| pos[i as usize])
                        .filter(|&i| i != u32::MAX)
                        .ok_or_else(|| Error::NotStabilised(format!("symplectic point {p:?} leaves W(3,q)")))
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::named::*;
    use super::*;
    use crate::projective::ProjectiveSpace;
    use crate::quadric::{gamma_quadric, hyp_quadric1, hyp_quadric2, paper_regulus, ReguliName};
    use std::sync::Arc;

    fn fld(k: u32) -> Field {
        Field::new(k).unwrap()
    }

    #[test]
    fn inverse_and_composition() {
        let f = fld(2);
        let els = [g(&f), tau(&f), phi(&f), z(&f), m(&f), c(&f), a(&f)];
        for x in &els {
            assert!(x.then(&f, &x.inverse(&f)).is_identity());
            for y in &els {
                let p = Point([Elem(3), Elem(7), Elem::ONE, Elem(9)]);
                let p = canonical_point(&f, &p.0).unwrap();
                assert_eq!(x.then(&f, y).act_point(&f, &p), y.act_point(&f, &x.act_point(&f, &p)));
            }
        }
    }

    #[test]
    fn orders_of_involutions() {
        let f = fld(3);
        for x in [g(&f), tau(&f), phi(&f), z(&f), m(&f)] {
            assert_eq!(x.order(&f), 2);
        }
    }

    #[test]
    fn g_and_tau_on_reguli() {
        let f = fld(2);
        let s = ProjectiveSpace::new(Arc::new(f.clone()));
        let r1 = paper_regulus(&s, ReguliName::R1).unwrap();
        let r2 = paper_regulus(&s, ReguliName::R2).unwrap();
        for l in r1.lines() {
            assert!(r2.contains(&g(&f).act_line(&f, l)));
        }
        let o = Elem::ONE;
        let zr = Elem::ZERO;
        let inf = s.line_from_rows([zr, zr, zr, o], [f.upsilon(), o, zr, zr]).unwrap();
        let want = s.line_from_rows([zr, zr, zr, o], [f.q_power(f.upsilon()), o, zr, zr]).unwrap();
        assert_eq!(tau(&f).act_line(&f, &inf), want);
        assert_eq!(phi(&f).act_line(&f, &inf), want);
    }

    #[test]
    fn reguli_actions_on_gamma_quadric() {
        let f = fld(2);
        let s = ProjectiveSpace::new(Arc::new(f.clone()));
        let quad = gamma_quadric(&s).unwrap();
        assert_eq!(g(&f).regulus_action(&f, &quad), ReguliAction::Swaps);
        assert_eq!(tau(&f).regulus_action(&f, &quad), ReguliAction::Swaps);
        assert_eq!(phi(&f).regulus_action(&f, &quad), ReguliAction::Swaps);
        assert_eq!(tau(&f).then(&f, &phi(&f)).regulus_action(&f, &quad), ReguliAction::Fixes);
        assert_eq!(c(&f).regulus_action(&f, &quad), ReguliAction::Swaps);
        assert_eq!(a(&f).regulus_action(&f, &quad), ReguliAction::Swaps);
        assert_eq!(d(&f).regulus_action(&f, &quad), ReguliAction::Fixes);
    }

    #[test]
    fn second_family_elements() {
        let f = fld(2);
        let s = ProjectiveSpace::new(Arc::new(f.clone()));
        let q1 = hyp_quadric1(&s).unwrap();
        let q2 = hyp_quadric2(&s).unwrap();
        assert_eq!(m(&f).regulus_action(&f, &q1), ReguliAction::Fixes);
        assert_eq!(z(&f).regulus_action(&f, &q1), ReguliAction::Swaps);
        assert!(m(&f).stabilises_form(&f, q2.form()));
        assert!(z(&f).stabilises_form(&f, q2.form()));
        let p0 = Point([Elem::ONE, Elem::ZERO, Elem::ONE, Elem::ZERO]);
        let r = Point([Elem::ZERO, Elem::ONE, Elem::ZERO, Elem::ONE]);
        assert_eq!(z(&f).act_point(&f, &p0), r);
        assert_eq!(z(&f).then(&f, &m(&f)).act_point(&f, &p0), p0);
    }

    #[test]
    fn a_fixes_w_and_c_fixes_n() {
        let f = fld(3);
        let gm = f.gamma();
        let o = Elem::ONE;
        let zr = Elem::ZERO;
        let a = a(&f);
        let p = Point([zr, o, zr, gm]);
        assert_eq!(a.act_point(&f, &p), p);
        for v in f.subfield_elements().filter(|v| !v.is_zero()) {
            let p = Point([o, v, zr, f.mul(gm, v)]);
            assert_eq!(a.act_point(&f, &p), p);
        }
        for u in f.elements() {
            let p = canonical_point(&f, &[u, o, u, o]).unwrap();
            assert_eq!(c(&f).act_point(&f, &p), p);
        }
        assert_eq!(c(&f), d(&f).then(&f, &tau(&f)));
    }

    #[test]
    fn j_parameters_checked() {
        let f = fld(3);
        assert!(j_element(&f, Elem::ONE, Elem::ONE, Elem::ONE, Elem::ONE).is_err());
        assert!(j_element(&f, f.upsilon(), Elem::ZERO, Elem::ZERO, f.inv(f.upsilon())).is_err());
        assert!(m_be(&f, Elem::ZERO, Elem::ONE).is_err());
        let x = j_element(&f, Elem::ONE, Elem::ZERO, Elem::ZERO, Elem::ONE).unwrap();
        assert!(x.is_identity());
    }

    #[test]
    fn named_elements_preserve_structure() {
        let f = fld(2);
        let s = ProjectiveSpace::new(Arc::new(f.clone()));
        let quad = gamma_quadric(&s).unwrap();
        for x in [g(&f), tau(&f), phi(&f), z(&f), m(&f), c(&f), a(&f)] {
            assert!(x.preserves_hermitian(&f));
            assert!(x.preserves_symplectic(&f));
        }
        for x in [g(&f), tau(&f), phi(&f), c(&f), a(&f)] {
            assert!(x.stabilises_form(&f, quad.form()));
        }
    }

    #[test]
    fn pushforward_matches_pointset() {
        let f = fld(2);
        let s = ProjectiveSpace::new(Arc::new(f.clone()));
        let q1 = hyp_quadric1(&s).unwrap();
        let tv = tau(&f).then(&f, &m(&f));
        let img = tv.pushforward_form(&f, q1.form());
        let mut from_pts: Vec<u32> =
            q1.points().iter().map(|&i| s.index_of(&tv.act_point(&f, &s.point(i)))).collect();
        from_pts.sort();
        let direct: Vec<u32> = (0..s.point_count() as u32).filter(|&i| img.eval(&f, &s.point(i).0).is_zero()).collect();
        assert_eq!(from_pts, direct);
    }

    #[test]
    fn perm_images_are_functorial() {
        let f = Arc::new(fld(1));
        let geom = Geometry::build(f.clone()).unwrap();
        let x = tau(&f);
        let y = phi(&f);
        for dom in [Domain::ExternalPoints, Domain::ExternalLines, Domain::SymplecticPoints] {
            let px = perm_image(&x, &geom, dom).unwrap();
            let py = perm_image(&y, &geom, dom).unwrap();
            let pxy = perm_image(&x.then(&f, &y), &geom, dom).unwrap();
            for i in 0..px.len() {
                assert_eq!(pxy[i], py[px[i] as usize]);
            }
        }
        let phi_pts = perm_image(&y, &geom, Domain::ExternalPoints).unwrap();
        assert!(phi_pts.iter().enumerate().all(|(i, &j)| i as u32 != j));
        let bad = Collineation::new(&f, mat_from_bits([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 2, 1]]), 0).unwrap();
        assert!(perm_image(&bad, &geom, Domain::ExternalLines).is_err());
    }
}
