//! The groups of the three constructions and the equivalence group, built from explicit
//! generators and certified by order.

use std::sync::Arc;

use crate::collineation::{named, Collineation, Mat4, ReguliAction};
use crate::error::{Error, Result};
use crate::galois::{Elem, Field};
use crate::permgroup::Group;
use crate::polar::symplectic_eval;
use crate::projective::{canonical_point, Point, ProjectiveSpace, Vec4};
use crate::quadric::{QuadraticForm, Quadric};

/// Canonical vectors of PG(3,q), in lexicographic order of their encodings.
pub fn baer_points(f: &Field) -> Vec<Vec4> {
    let sub: Vec<Elem> = f.subfield_elements().collect();
    let mut out = Vec::new();
    for &a in &sub {
        for &b in &sub {
            for &c in &sub {
                for &d in &sub {
                    let v = [a, b, c, d];
                    if let Some(p) = canonical_point(f, &v) {
                        if p.0 == v {
                            out.push(v);
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

pub fn sp4_order(q: u128) -> u128 {
    q.pow(4) * (q * q - 1) * (q.pow(4) - 1)
}

pub fn omega_minus_order(q: u128) -> u128 {
    q * q * (q.pow(4) - 1)
}

pub fn psl2_order(q: u128) -> u128 {
    q * (q * q - 1)
}

/// x ↦ x + λ b(x,v) v with b the symplectic form.
pub fn transvection(f: &Field, v: &Vec4, lambda: Elem) -> Collineation {
    let w = [v[1], v[0], v[3], v[2]];
    let mut m: Mat4 = crate::collineation::identity_mat();
    for a in 0..4 {
        for c in 0..4 {
            m[a][c] += f.mul(lambda, f.mul(w[a], v[c]));
        }
    }
    Collineation::new(f, m, 0).expect("transvections are invertible")
}

/// Eichler transformation x ↦ x + b(x,v)u + b(x,u)v + Q(v)b(x,u)u, for Q(u) = 0 and b(u,v) = 0.
pub fn eichler(f: &Field, form: &QuadraticForm, u: &Vec4, v: &Vec4) -> Collineation {
    Collineation::new(f, eichler_matrix(f, form, u, v), 0).expect("Eichler transformations are invertible")
}

pub fn eichler_matrix(f: &Field, form: &QuadraticForm, u: &Vec4, v: &Vec4) -> Mat4 {
    let qv = form.eval(f, v);
    let mut m: Mat4 = [[Elem::ZERO; 4]; 4];
    for (a, row) in m.iter_mut().enumerate() {
        let mut e = [Elem::ZERO; 4];
        e[a] = Elem::ONE;
        let bv = form.polar(f, &e, v);
        let bu = form.polar(f, &e, u);
        for c in 0..4 {
            row[c] = e[c] + f.mul(bv, u[c]) + f.mul(bu, v[c]) + f.mul(f.mul(qv, bu), u[c]);
        }
    }
    m
}

/// A basis of {x ∈ GF(q)⁴ : b(u,x) = 0}.
fn perp_basis(f: &Field, form: &QuadraticForm, u: &Vec4) -> Vec<Vec4> {
    let c: Vec<Elem> = (0..4)
        .map(|i| {
            let mut e = [Elem::ZERO; 4];
            e[i] = Elem::ONE;
            form.polar(f, u, &e)
        })
        .collect();
    let j = c.iter().position(|x| !x.is_zero()).expect("nondegenerate form");
    (0..4)
        .filter(|&i| i != j)
        .map(|i| {
            let mut v = [Elem::ZERO; 4];
            v[i] = Elem::ONE;
            v[j] = f.div(c[i], c[j]);
            v
        })
        .collect()
}

pub fn eichler_generators(f: &Field, form: &QuadraticForm) -> Vec<Collineation> {
    let basis = f.subfield_basis();
    let mut out = Vec::new();
    for u in baer_points(f).into_iter().filter(|u| form.eval(f, u).is_zero()) {
        for v in perp_basis(f, form, &u) {
            for &l in &basis {
                let lv = v.map(|x| f.mul(x, l));
                let e = eichler(f, form, &u, &lv);
                if !e.is_identity() {
                    out.push(e);
                }
            }
        }
    }
    out
}

pub fn symplectic_group(field: &Arc<Field>) -> Result<Group> {
    let f = &**field;
    let basis = f.subfield_basis();
    let gens = baer_points(f).into_iter().flat_map(|v| basis.iter().map(move |&l| (v, l)).collect::<Vec<_>>());
    Group::generate_until(field.clone(), gens.map(|(v, l)| transvection(f, &v, l)), sp4_order(f.q() as u128))
}

/// (G_fix, Ḡ_full): the reguli-fixing isometries of x₁² + υ^{q+1}x₂² + x₁x₂ + x₃x₄ over GF(q),
/// generated by Eichler transformations, and its extension by the swap g.
pub fn omega_minus(field: &Arc<Field>, quad: &Quadric) -> Result<(Group, Group)> {
    let f = &**field;
    let form = QuadraticForm::gamma_quad(f);
    let q = f.q() as u128;
    let gfix = Group::generate_until(field.clone(), eichler_generators(f, &form), omega_minus_order(q))?;
    for x in gfix.generators() {
        if x.regulus_action(f, quad) != ReguliAction::Fixes {
            return Err(Error::Group("an Eichler generator moves a regulus".into()));
        }
    }
    let g = named::g(f);
    if g.regulus_action(f, quad) != ReguliAction::Swaps {
        return Err(Error::Group("g does not swap the reguli".into()));
    }
    let mut gbar = gfix.clone();
    gbar.extend(&g);
    if gbar.order() != 2 * gfix.order() {
        return Err(Error::Group(format!("|Ḡ_full| = {}", gbar.order())));
    }
    Ok((gfix, gbar))
}

/// All J(b,c,e,f), b,c,e,f ∈ GF(q), bf + ce = 1.
pub fn j_elements(f: &Field) -> Vec<Collineation> {
    let sub: Vec<Elem> = f.subfield_elements().collect();
    let mut out = Vec::new();
    for &b in &sub {
        for &c in &sub {
            for &e in &sub {
                for &ff in &sub {
                    if f.mul(b, ff) + f.mul(c, e) == Elem::ONE {
                        out.push(named::j_element(f, b, c, e, ff).unwrap());
                    }
                }
            }
        }
    }
    out
}

/// J ≅ PSL(2,q), certified to consist of exactly the listed matrices.
pub fn j_group(field: &Arc<Field>) -> Result<Group> {
    let f = &**field;
    let all = j_elements(f);
    let target = psl2_order(f.q() as u128);
    let mut j = Group::trivial(field.clone());
    for x in &all {
        j.extend(x);
    }
    if j.order() != target || all.len() as u128 != target {
        return Err(Error::Group(format!("|J| = {} from {} matrices, expected {target}", j.order(), all.len())));
    }
    Ok(j)
}

/// (G, Ḡ) = (J × ⟨τφ⟩, J × ⟨τ, φ⟩).
pub fn cossidente1(field: &Arc<Field>) -> Result<(Group, Group, Group)> {
    let f = &**field;
    let j = j_group(field)?;
    let tau = named::tau(f);
    let phi = named::phi(f);
    let mut g = j.clone();
    g.extend(&tau.then(f, &phi));
    let mut gbar = g.clone();
    gbar.extend(&tau);
    gbar.extend(&phi);
    let n = j.order();
    if g.order() != 2 * n || gbar.order() != 4 * n {
        return Err(Error::Group(format!("|G| = {}, |Ḡ| = {}", g.order(), gbar.order())));
    }
    Ok((g, gbar, j))
}

/// The point E₃ = (0,0,1,0) of the elliptic quadric 𝒬⁺ ∩ W(3,q).
pub fn ovoid_point() -> Point {
    Point([Elem::ZERO, Elem::ZERO, Elem::ONE, Elem::ZERO])
}

/// (M, M̄) of orders q²(q+1) and 2q²(q+1). With B = PΩ⁻(4,q)_P for P = E₃, a Borel subgroup
/// U:C_{q²−1}, M = U:C_{q+1} is the normal closure in B of the (q−1)-th power of the first
/// element of order q²−1 met in breadth-first order, and M̄ = M:⟨s⟩ for the first regulus
/// swapping involution s of PSO⁻(4,q)_P met in that order. M fixes the two lines of 𝒬⁺
/// through P.
pub fn cossidente2(field: &Arc<Field>, quad: &Quadric) -> Result<(Group, Group)> {
    let f = &**field;
    let q = f.q() as u64;
    let (gfix, gbar) = omega_minus(field, quad)?;
    let p = ovoid_point();
    let bound = 1 << 20;
    let b = gfix.point_stabilizer(&p)?;
    let h = b
        .elements(bound)?
        .into_iter()
        .find(|x| x.order(f) == q * q - 1)
        .ok_or_else(|| Error::Group("no element of order q²−1 fixes P".into()))?;
    let m = b.normal_closure(&[h.pow(f, q - 1)]);
    let want = (q * q * (q + 1)) as u128;
    if m.order() != want {
        return Err(Error::Group(format!("|M| = {} instead of {want}", m.order())));
    }
    let bbar = gbar.point_stabilizer(&p)?;
    let s = bbar
        .elements(bound)?
        .into_iter()
        .find(|x| x.order(f) == 2 && x.regulus_action(f, quad) == ReguliAction::Swaps)
        .ok_or_else(|| Error::Group("no regulus swapping involution fixes P".into()))?;
    let si = s.inverse(f);
    if !m.generators().iter().all(|x| m.contains(&si.then(f, x).then(f, &s))) {
        return Err(Error::Group("s does not normalise M".into()));
    }
    let mut mbar = m.clone();
    mbar.extend(&s);
    if mbar.order() != 2 * want {
        return Err(Error::Group(format!("|M̄| = {}", mbar.order())));
    }
    Ok((m, mbar))
}

/// Stabiliser of the displayed hyperbolic quadric Q₁⁺ inside `ambient`, computed as the
/// stabiliser of its normalised form inside the stabiliser of (1,1,0,0) = ℓ₁ ∩ ℓ₂, and its
/// reguli-fixing subgroup (the stabiliser of ℓ₁).
pub fn hyperbolic_pair_stabiliser(ambient: &Group, q1: &Quadric) -> Result<(Group, Group)> {
    let f = ambient.field();
    let space = ProjectiveSpace::new(ambient.field_arc().clone());
    let o = Elem::ONE;
    let z = Elem::ZERO;
    let kp = ambient.point_stabilizer(&Point([o, o, z, z]))?;
    let form = q1.form().normalized(f);
    let gens = kp.generators().to_vec();
    let (sbar, _) = kp.stabilizer_by_orbit(form, |gi, x| gens[gi].pushforward_form(f, x), 1 << 22)?;
    let l1 = space.line_from_rows([o, o, z, z], [z, z, o, z])?;
    let sgens = sbar.generators().to_vec();
    let (s, _) = sbar.stabilizer_by_orbit(l1, |gi, l| sgens[gi].act_line(f, l), 1 << 16)?;
    Ok((s, sbar))
}

/// E = ⟨Sp(4,q), x ↦ x²⟩.
pub fn equivalence_group(field: &Arc<Field>) -> Result<Group> {
    let f = &**field;
    let mut e = symplectic_group(field)?;
    let sigma = Collineation::new(f, crate::collineation::identity_mat(), 1)?;
    e.extend(&sigma);
    let want = sp4_order(f.q() as u128) * f.degree() as u128;
    if e.order() != want {
        return Err(Error::Group(format!("|E| = {} instead of {want}", e.order())));
    }
    Ok(e)
}

/// Checks that b(x A, y A) is a multiple of b(x, y), on a basis.
pub fn is_symplectic_similarity(f: &Field, g: &Collineation) -> bool {
    let basis: Vec<Vec4> = (0..4)
        .map(|i| {
            let mut e = [Elem::ZERO; 4];
            e[i] = Elem::ONE;
            e
        })
        .collect();
    let img: Vec<Vec4> = basis.iter().map(|e| g.apply(f, e)).collect();
    let lam = symplectic_eval(f, &img[0], &img[1]);
    (0..4).all(|i| (0..4).all(|j| symplectic_eval(f, &img[i], &img[j]) == f.mul(lam, symplectic_eval(f, &basis[i], &basis[j]))))
}
