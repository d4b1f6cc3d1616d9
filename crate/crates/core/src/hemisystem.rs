//! Relative hemisystems: verification, the index-two orbit conditions, selections and the
//! three known families.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::collineation::{Collineation, Domain, ReguliAction};
use crate::error::{Error, Result};
use crate::groups;
use crate::permgroup::{Group, OrbitDecomposition};
use crate::polar::Geometry;
use crate::projective::ProjectiveSpace;
use crate::quadric::{gamma_quadric, Quadric};

/// Subset of the external lines, as a bitmap over their dense indices.
pub type LineSet = FixedBitSet;

pub fn line_set(geom: &Geometry, lines: impl IntoIterator<Item = u32>) -> Result<LineSet> {
    let n = geom.ext_line_count();
    let mut s = FixedBitSet::with_capacity(n);
    for l in lines {
        if l as usize >= n {
            return Err(Error::Format(format!("external line index {l} out of range (< {n})")));
        }
        s.insert(l as usize);
    }
    Ok(s)
}

pub fn complement(s: &LineSet) -> LineSet {
    let mut c = s.clone();
    c.toggle_range(..);
    c
}

/// Image of a line set under a permutation of the external lines.
pub fn image(perm: &[u32], s: &LineSet) -> LineSet {
    let mut out = FixedBitSet::with_capacity(s.len());
    for l in s.ones() {
        out.insert(perm[l] as usize);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub point: u32,
    pub coords: [u8; 4],
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub size: usize,
    pub expected_size: usize,
    pub witness: Option<Witness>,
}

/// Checks the definition directly on the incidence lists: every external point must lie on
/// exactly q/2 member lines. Uses no group data.
pub fn verify(geom: &Geometry, lines: &LineSet) -> VerifyReport {
    let half = geom.q() / 2;
    let mut witness = None;
    for x in 0..geom.ext_point_count() as u32 {
        let count = geom.ext_point_lines(x).iter().filter(|&&l| lines.contains(l as usize)).count();
        if count != half {
            let p = geom.ext_point(x);
            witness = Some(Witness { point: x, coords: p.0.map(|e| e.bits()), count });
            break;
        }
    }
    VerifyReport {
        ok: witness.is_none(),
        size: lines.count_ones(..),
        expected_size: geom.ext_line_count() / 2,
        witness,
    }
}

/// |{m ∈ ℓ^G : X ∈ m}| for the orbit decomposition of G on external lines.
pub fn line_orbit_incidence(geom: &Geometry, line_orbits: &OrbitDecomposition, x: u32, l: u32) -> usize {
    let id = line_orbits.orbit_of[l as usize];
    geom.ext_point_lines(x).iter().filter(|&&m| line_orbits.orbit_of[m as usize] == id).count()
}

/// Orbit data of a pair G < Ḡ on external points and lines.
pub struct PairOrbits {
    pub g_lines: OrbitDecomposition,
    pub gbar_lines: OrbitDecomposition,
    pub g_points: OrbitDecomposition,
    pub gbar_points: OrbitDecomposition,
    pub gbar_point_perms: Vec<Vec<u32>>,
    pub gbar_line_perms: Vec<Vec<u32>>,
}

impl PairOrbits {
    pub fn compute(geom: &Geometry, g: &Group, gbar: &Group) -> Result<PairOrbits> {
        let gl = g.perms(geom, Domain::ExternalLines)?;
        let gp = g.perms(geom, Domain::ExternalPoints)?;
        let bl = gbar.perms(geom, Domain::ExternalLines)?;
        let bp = gbar.perms(geom, Domain::ExternalPoints)?;
        let nl = geom.ext_line_count();
        let np = geom.ext_point_count();
        Ok(PairOrbits {
            g_lines: OrbitDecomposition::from_perms(Domain::ExternalLines, nl, &gl),
            gbar_lines: OrbitDecomposition::from_perms(Domain::ExternalLines, nl, &bl),
            g_points: OrbitDecomposition::from_perms(Domain::ExternalPoints, np, &gp),
            gbar_points: OrbitDecomposition::from_perms(Domain::ExternalPoints, np, &bp),
            gbar_point_perms: bp,
            gbar_line_perms: bl,
        })
    }

    /// For each Ḡ-orbit on lines (ordered by least member), its G-suborbits ordered by least
    /// member.
    pub fn suborbits(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.gbar_lines.count()];
        for (id, &rep) in self.g_lines.reps.iter().enumerate() {
            out[self.gbar_lines.orbit_of[rep as usize] as usize].push(id as u32);
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremReport {
    pub order_g: String,
    pub order_gbar: String,
    pub index_two: bool,
    pub semiregular: bool,
    pub equal_point_orbits: bool,
    pub g_line_orbits: usize,
    pub gbar_line_orbits: usize,
    pub g_point_orbits: usize,
    pub gbar_point_orbits: usize,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.index_two && self.semiregular && self.equal_point_orbits
    }
}

/// Evaluates the three orbit conditions exactly. With |Ḡ:G| = 2 the quotient Ḡ/G has order
/// two, so Ḡ is semiregular on ℒ_E/G iff every Ḡ-orbit is the union of exactly two G-orbits.
/// G-orbits refine Ḡ-orbits, so the point partitions agree iff the orbit counts agree.
pub fn check_theorem_conditions(g: &Group, gbar: &Group, orbits: &PairOrbits) -> Result<TheoremReport> {
    if let Some(x) = g.generators().iter().find(|x| !gbar.contains(x)) {
        return Err(Error::Conditions(format!("G is not contained in Ḡ: {x:?}")));
    }
    let index_two = gbar.order() == 2 * g.order();
    let semiregular = orbits.suborbits().iter().all(|s| s.len() == 2);
    let equal_point_orbits = orbits.g_points.count() == orbits.gbar_points.count();
    Ok(TheoremReport {
        order_g: g.order().to_string(),
        order_gbar: gbar.order().to_string(),
        index_two,
        semiregular,
        equal_point_orbits,
        g_line_orbits: orbits.g_lines.count(),
        gbar_line_orbits: orbits.gbar_lines.count(),
        g_point_orbits: orbits.g_points.count(),
        gbar_point_orbits: orbits.gbar_points.count(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointCheck {
    pub point: u32,
    pub stabiliser_order: String,
    pub swapper: Option<Collineation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub points: Vec<PointCheck>,
}

impl CorollaryReport {
    pub fn passed(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.swapper.is_some())
    }
}

/// For one point per G-orbit on 𝒫_E, computes Ḡ_P and looks for a regulus swapper among its
/// generators. The reguli fixers form a subgroup of index at most two, so Ḡ_P has a swapper
/// iff one of its generators is one.
pub fn check_corollary_conditions(g: &Group, gbar: &Group, quad: &Quadric, orbits: &PairOrbits) -> Result<CorollaryReport> {
    let f = gbar.field();
    for x in gbar.generators() {
        if x.regulus_action(f, quad) == ReguliAction::MovesQuadric {
            return Err(Error::Conditions("Ḡ does not stabilise the quadric".into()));
        }
    }
    if g.generators().iter().any(|x| x.regulus_action(f, quad) != ReguliAction::Fixes) {
        return Err(Error::Conditions("G contains a regulus swapper".into()));
    }
    let mut points = Vec::new();
    for &p in &orbits.g_points.reps {
        let stab = gbar.index_stabilizer(&orbits.gbar_point_perms, p)?;
        let swapper = stab.generators().iter().find(|x| x.regulus_action(f, quad) == ReguliAction::Swaps).cloned();
        points.push(PointCheck { point: p, stabiliser_order: stab.order().to_string(), swapper });
    }
    Ok(CorollaryReport { points })
}

/// ⋃ ℓᵢ^G taking, in the i-th Ḡ-orbit, the G-suborbit with the least member when σᵢ is
/// false and the other one when it is true.
pub fn construct_selection(geom: &Geometry, orbits: &PairOrbits, sigma: &[bool]) -> Result<LineSet> {
    let sub = orbits.suborbits();
    if sigma.len() != sub.len() {
        return Err(Error::Parameter(format!("selection has length {}, expected {}", sigma.len(), sub.len())));
    }
    if sub.iter().any(|s| s.len() != 2) {
        return Err(Error::Conditions("Ḡ does not act semiregularly on ℒ_E/G".into()));
    }
    let chosen: Vec<u32> = sub.iter().zip(sigma).map(|(s, &b)| s[b as usize]).collect();
    let mut take = vec![false; orbits.g_lines.count()];
    for c in chosen {
        take[c as usize] = true;
    }
    line_set(geom, (0..geom.ext_line_count() as u32).filter(|&l| take[orbits.g_lines.orbit_of[l as usize] as usize]))
}

pub fn parse_sigma(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parameter(format!("selection must be a 0/1 string, got {s:?}"))),
        })
        .collect()
}

pub fn format_sigma(sigma: &[bool]) -> String {
    sigma.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Groups and quadric attached to a family.
pub struct FamilyGroups {
    pub g: Group,
    pub gbar: Group,
    pub quadric: Quadric,
    /// Further groups worth reporting (name, order).
    pub extra: Vec<(String, u128)>,
}

pub trait Family: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn check_q(&self, q: usize) -> Result<()>;
    fn groups(&self, geom: &Geometry) -> Result<FamilyGroups>;
}

struct PenttilaWilliford;
struct Cossidente1;
struct Cossidente2;

fn needs_q_above_4(name: &str, q: usize) -> Result<()> {
    if q > 4 {
        Ok(())
    } else {
        Err(Error::UnsupportedQ(format!("{name} requires q > 4, got q = {q}")))
    }
}

impl Family for PenttilaWilliford {
    fn name(&self) -> &'static str {
        "pw"
    }

    fn summary(&self) -> &'static str {
        "orbits of PΩ⁻(4,q) on external lines"
    }

    fn check_q(&self, _q: usize) -> Result<()> {
        Ok(())
    }

    fn groups(&self, geom: &Geometry) -> Result<FamilyGroups> {
        let space = ProjectiveSpace::new(geom.field_arc().clone());
        let quadric = gamma_quadric(&space)?;
        let (g, gbar) = groups::omega_minus(geom.field_arc(), &quadric)?;
        Ok(FamilyGroups { g, gbar, quadric, extra: Vec::new() })
    }
}

impl Family for Cossidente1 {
    fn name(&self) -> &'static str {
        "cossidente1"
    }

    fn summary(&self) -> &'static str {
        "PSL(2,q)-invariant perturbations of the pw pair, q > 4"
    }

    fn check_q(&self, q: usize) -> Result<()> {
        needs_q_above_4(self.name(), q)
    }

    fn groups(&self, geom: &Geometry) -> Result<FamilyGroups> {
        self.check_q(geom.q())?;
        let space = ProjectiveSpace::new(geom.field_arc().clone());
        let quadric = gamma_quadric(&space)?;
        let (g, gbar, j) = groups::cossidente1(geom.field_arc())?;
        Ok(FamilyGroups { g, gbar, quadric, extra: vec![("J".into(), j.order())] })
    }
}

impl Family for Cossidente2 {
    fn name(&self) -> &'static str {
        "cossidente2"
    }

    fn summary(&self) -> &'static str {
        "orbits of U:C_(q+1) fixing a point of the elliptic quadric, q > 4"
    }

    fn check_q(&self, q: usize) -> Result<()> {
        needs_q_above_4(self.name(), q)
    }

    fn groups(&self, geom: &Geometry) -> Result<FamilyGroups> {
        self.check_q(geom.q())?;
        let space = ProjectiveSpace::new(geom.field_arc().clone());
        let quadric = gamma_quadric(&space)?;
        let (g, gbar) = groups::cossidente2(geom.field_arc(), &quadric)?;
        Ok(FamilyGroups { g, gbar, quadric, extra: Vec::new() })
    }
}

static FAMILIES: &[&dyn Family] = &[&PenttilaWilliford, &Cossidente1, &Cossidente2];

pub fn families() -> &'static [&'static dyn Family] {
    FAMILIES
}

pub fn family_by_name(name: &str) -> Result<&'static dyn Family> {
    FAMILIES.iter().copied().find(|f| f.name() == name).ok_or_else(|| {
        let known: Vec<&str> = FAMILIES.iter().map(|f| f.name()).collect();
        Error::Parameter(format!("unknown family {name:?}; known: {}", known.join(", ")))
    })
}

/// A family's groups with its checked conditions; selections are built from it.
pub struct Construction {
    pub family: &'static str,
    pub groups: FamilyGroups,
    pub orbits: PairOrbits,
    pub theorem: TheoremReport,
    pub corollary: CorollaryReport,
}

impl Construction {
    pub fn new(geom: &Geometry, family: &'static dyn Family) -> Result<Construction> {
        family.check_q(geom.q())?;
        let groups = family.groups(geom)?;
        let orbits = PairOrbits::compute(geom, &groups.g, &groups.gbar)?;
        let theorem = check_theorem_conditions(&groups.g, &groups.gbar, &orbits)?;
        let corollary = check_corollary_conditions(&groups.g, &groups.gbar, &groups.quadric, &orbits)?;
        Ok(Construction { family: family.name(), groups, orbits, theorem, corollary })
    }

    /// Number of Ḡ-orbits on ℒ_E, i.e. the length of a selection.
    pub fn n(&self) -> usize {
        self.orbits.gbar_lines.count()
    }

    /// Builds and verifies one selection. Refuses if the conditions do not hold.
    pub fn select(&self, geom: &Geometry, sigma: &[bool]) -> Result<Hemisystem> {
        if !self.theorem.passed() {
            return Err(Error::Conditions(format!("{} does not satisfy the orbit conditions", self.family)));
        }
        let lines = construct_selection(geom, &self.orbits, sigma)?;
        let h = Hemisystem::new(geom, lines, Provenance::Family(self.family.to_string()), Some(sigma.to_vec()));
        let report = verify(geom, &h.lines);
        if !report.ok {
            return Err(Error::Verification(format!("{} selection {} fails: {:?}", self.family, format_sigma(sigma), report.witness)));
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Family(String),
    Search,
    Import,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Family(n) => write!(f, "{n}"),
            Provenance::Search => write!(f, "search"),
            Provenance::Import => write!(f, "import"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hemisystem {
    pub q: usize,
    pub lines: LineSet,
    pub provenance: Provenance,
    pub sigma: Option<Vec<bool>>,
    pub digest: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HemisystemJson {
    pub q: usize,
    pub provenance: Provenance,
    pub n: Option<usize>,
    pub sigma: Option<String>,
    pub line_indices: Vec<u32>,
    pub digest: String,
}

impl Hemisystem {
    pub fn new(geom: &Geometry, lines: LineSet, provenance: Provenance, sigma: Option<Vec<bool>>) -> Self {
        Hemisystem { q: geom.q(), lines, provenance, sigma, digest: geom.digest() }
    }

    pub fn indices(&self) -> Vec<u32> {
        self.lines.ones().map(|l| l as u32).collect()
    }

    pub fn to_json(&self) -> HemisystemJson {
        HemisystemJson {
            q: self.q,
            provenance: self.provenance.clone(),
            n: self.sigma.as_ref().map(|s| s.len()),
            sigma: self.sigma.as_deref().map(format_sigma),
            line_indices: self.indices(),
            digest: self.digest.clone(),
        }
    }

    /// Rebuilds a hemisystem from JSON without verifying it.
    pub fn from_json(geom: &Geometry, json: &HemisystemJson) -> Result<Hemisystem> {
        if json.q != geom.q() {
            return Err(Error::Format(format!("file is for q = {}, geometry has q = {}", json.q, geom.q())));
        }
        if json.digest != geom.digest() {
            return Err(Error::Format("geometry digest mismatch".into()));
        }
        let sigma = json.sigma.as_deref().map(parse_sigma).transpose()?;
        let lines = line_set(geom, json.line_indices.iter().copied())?;
        Ok(Hemisystem { q: json.q, lines, provenance: json.provenance.clone(), sigma, digest: json.digest.clone() })
    }
}

/// One class of the partition of a hemisystem list into E-orbits.
#[derive(Clone, Debug)]
pub struct EquivalenceClass {
    pub members: Vec<usize>,
    pub orbit_size: usize,
    /// For each member after the first: an element of E mapping the first member onto it.
    pub certificates: Vec<(usize, Collineation)>,
}

/// Partitions `hemis` by E-orbits, enumerating each orbit of line sets explicitly.
pub fn equivalence_classes(geom: &Geometry, hemis: &[LineSet], e: &Group, bound: usize) -> Result<Vec<EquivalenceClass>> {
    let perms = e.perms(geom, Domain::ExternalLines)?;
    let f = geom.field();
    let mut index: HashMap<&LineSet, Vec<usize>> = HashMap::new();
    for (i, h) in hemis.iter().enumerate() {
        index.entry(h).or_default().push(i);
    }
    let mut class_of = vec![usize::MAX; hemis.len()];
    let mut classes = Vec::new();
    for i in 0..hemis.len() {
        if class_of[i] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let (orbit, parent) = set_orbit(&perms, &hemis[i], bound)?;
        let mut members = Vec::new();
        let mut certificates = Vec::new();
        for (k, s) in orbit.iter().enumerate() {
            if let Some(js) = index.get(s) {
                for &j in js {
                    if class_of[j] != usize::MAX {
                        continue;
                    }
                    class_of[j] = id;
                    members.push(j);
                    if j != i {
                        certificates.push((j, word_element(f, e.generators(), &parent, k)));
                    }
                }
            }
        }
        classes.push(EquivalenceClass { members, orbit_size: orbit.len(), certificates });
    }
    Ok(classes)
}

/// Orbit members with BFS parents (orbit index, generator).
pub type SetOrbit = (Vec<LineSet>, Vec<(usize, usize)>);

/// Orbit of a line set under generator permutations, with BFS parents (orbit index, generator).
pub fn set_orbit(perms: &[Vec<u32>], start: &LineSet, bound: usize) -> Result<SetOrbit> {
    let mut seen: HashMap<LineSet, ()> = HashMap::from([(start.clone(), ())]);
    let mut orbit = vec![start.clone()];
    let mut parent = vec![(usize::MAX, usize::MAX)];
    let mut k = 0;
    while k < orbit.len() {
        for (gi, p) in perms.iter().enumerate() {
            let y = image(p, &orbit[k]);
            if !seen.contains_key(&y) {
                if orbit.len() >= bound {
                    return Err(Error::OrbitBound { bound });
                }
                seen.insert(y.clone(), ());
                orbit.push(y);
                parent.push((k, gi));
            }
        }
        k += 1;
    }
    Ok((orbit, parent))
}

fn word_element(f: &crate::galois::Field, gens: &[Collineation], parent: &[(usize, usize)], mut k: usize) -> Collineation {
    let mut word = Vec::new();
    while parent[k].0 != usize::MAX {
        word.push(parent[k].1);
        k = parent[k].0;
    }
    word.iter().rev().fold(Collineation::identity(), |acc, &gi| acc.then(f, &gens[gi]))
}

/// Convenience for tests and the CLI: a geometry with its field.
pub fn geometry(k: u32) -> Result<Geometry> {
    Geometry::build(Arc::new(crate::galois::Field::new(k)?))
}
