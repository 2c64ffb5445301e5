//! Exact limit classifiers for translated homogeneous measures and the
//! truncated non-divergence quantity `δ`.
//!
//! Sequences follow the exponential model `a_n = exp(n·v)`, so every
//! "tends to ∞ / converges / tends to 0" question about a root value becomes
//! an exact sign test on a rational pairing.
//!
//! Component labels are subsets `J ⊆ Δ`: the parabolic `P_J` whose boundary
//! component carries the limit, equivalently the simple roots that stay
//! bounded on reduced points. `J = Δ` is the interior.

use std::fmt;

use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::lingrp::{d_function, langlands, GroupElement, ParabolicIndex};
use crate::measures::{int_inverse, int_mul, IntMatrix, SubgroupKind, SubgroupSpec};
use crate::rational::{q, to_f64, Direction, Q};
use crate::reduction::GammaEnumerator;
use crate::rootsys::{ChamberFace, RootSet, RootSystem, WeightVector, WeylElement};

/// Fixed or reduced-coordinate description of the bounded part of `g_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundedPart {
    /// `g_n = s · exp(n·v + offset)` with `s` upper unitriangular; entries
    /// are listed as `((i, j), value)`, 0-based, `i < j`.
    Fixed { unipotent: Vec<((usize, usize), Q)>, offset: Direction },
    /// `SL_3` sequences already brought to the reduced form
    /// `g_n = u · diag(z⁻², zV, z/V)` with `log z = −n·v₁/2` and
    /// `V = v0·exp(n·rate)`; `u` holds `(u12, u13, u23)`.
    ReducedLevi { u: [f64; 3], rate: Q, v0: f64 },
}

impl BoundedPart {
    pub fn none(dim: usize) -> Self {
        BoundedPart::Fixed { unipotent: Vec::new(), offset: Direction::zero(dim) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConjugatorPolicy {
    Identity,
    /// `γ_n` per evaluation index (one entry, or one per index); the
    /// sequence is `(γ_n H γ_n⁻¹, γ_n g_n)`.
    Recorded(Vec<IntMatrix>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub subgroup: SubgroupSpec,
    pub direction: Direction,
    pub bounded: BoundedPart,
    pub conjugators: ConjugatorPolicy,
    pub indices: Vec<u32>,
}

impl SequenceSpec {
    pub fn new(subgroup: SubgroupSpec, direction: Direction, indices: Vec<u32>) -> Self {
        let d = direction.len();
        SequenceSpec {
            subgroup,
            direction,
            bounded: BoundedPart::none(d),
            conjugators: ConjugatorPolicy::Identity,
            indices,
        }
    }

    pub fn validate(&self, rs: &RootSystem) -> Result<()> {
        rs.check_direction(&self.direction)?;
        self.subgroup.validate(rs)?;
        if self.indices.is_empty() || self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("indices must be non-empty and strictly increasing".into()));
        }
        match &self.bounded {
            BoundedPart::Fixed { unipotent, offset } => {
                rs.check_direction(offset)?;
                for &((i, j), _) in unipotent {
                    if !(i < j && j < rs.dim()) {
                        return Err(Error::InvalidInput(format!(
                            "unipotent entry ({}, {}) is not above the diagonal",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
            BoundedPart::ReducedLevi { v0, .. } => {
                if rs.factors() != [3] {
                    return Err(Error::InvalidInput("reduced Levi coordinates are defined for SL_3 only".into()));
                }
                if !(*v0 > 0.0) {
                    return Err(Error::InvalidInput("v0 must be positive".into()));
                }
            }
        }
        if let ConjugatorPolicy::Recorded(list) = &self.conjugators {
            if list.len() != 1 && list.len() != self.indices.len() {
                return Err(Error::InvalidInput("need one conjugator or one per index".into()));
            }
            let d = rs.dim();
            for c in list {
                SubgroupSpec::conjugated(SubgroupKind::Trivial, c.clone()).validate(rs)?;
                if c.len() != d * d {
                    return Err(Error::InvalidInput("conjugator has wrong size".into()));
                }
            }
        }
        Ok(())
    }

    fn conjugator_at(&self, pos: usize) -> Option<&IntMatrix> {
        match &self.conjugators {
            ConjugatorPolicy::Identity => None,
            ConjugatorPolicy::Recorded(list) => Some(if list.len() == 1 { &list[0] } else { &list[pos] }),
        }
    }

    /// Untranslated `g_n` (before any recorded conjugator).
    pub fn base_element(&self, rs: &RootSystem, n: u32) -> Result<GroupElement> {
        let d = rs.dim();
        let nf = n as f64;
        let m = match &self.bounded {
            BoundedPart::Fixed { unipotent, offset } => {
                let mut s = DMatrix::<f64>::identity(d, d);
                for &((i, j), x) in unipotent {
                    s[(i, j)] = to_f64(&x);
                }
                let diag: Vec<f64> = self
                    .direction
                    .to_f64()
                    .iter()
                    .zip(offset.to_f64())
                    .map(|(v, o)| (nf * v + o).exp())
                    .collect();
                s * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
            }
            BoundedPart::ReducedLevi { u, rate, v0 } => {
                let logz = -nf * to_f64(&self.direction.0[0]) / 2.0;
                let logv = v0.ln() + nf * to_f64(rate);
                let diag = [-2.0 * logz, logz + logv, logz - logv].map(f64::exp);
                let mut s = DMatrix::<f64>::identity(3, 3);
                s[(0, 1)] = u[0];
                s[(0, 2)] = u[1];
                s[(1, 2)] = u[2];
                s * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&diag))
            }
        };
        GroupElement::new(m, rs.factors())
    }

    /// `(H_n, g_n)` at the `pos`-th configured index.
    pub fn evaluate(&self, rs: &RootSystem, pos: usize) -> Result<(SubgroupSpec, GroupElement)> {
        let n = self.indices[pos];
        let base = self.base_element(rs, n)?;
        match self.conjugator_at(pos) {
            None => Ok((self.subgroup.clone(), base)),
            Some(c) => {
                let d = rs.dim();
                let conj = match &self.subgroup.conjugator {
                    None => c.clone(),
                    Some(inner) => int_mul(c, inner, d),
                };
                let cm = GroupElement::from_integer(
                    &(0..d).map(|i| c[i * d..(i + 1) * d].to_vec()).collect::<Vec<_>>(),
                    rs.factors(),
                )?;
                Ok((SubgroupSpec::conjugated(self.subgroup.kind.clone(), conj), cm.mul(&base)))
            }
        }
    }

    pub fn largest_index_position(&self) -> usize {
        self.indices.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportKind {
    Interior,
    BoundaryHomogeneous,
    DiracPoint,
}

impl fmt::Display for SupportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SupportKind::Interior => "interior",
            SupportKind::BoundaryHomogeneous => "boundary_homogeneous",
            SupportKind::DiracPoint => "dirac_point",
        })
    }
}

/// Predicted limit: the supporting parabolic (as a component label, up to
/// `Γ`-conjugacy) and the branch trace.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitDescriptor {
    /// `None` when the theory locates the limit only through an extracted
    /// subsequence; callers fill it from data.
    pub label: Option<RootSet>,
    pub support: SupportKind,
    /// Weyl element `w` when the parabolic is `w P_J w⁻¹`.
    pub weyl: Option<WeylElement>,
    pub trace: Vec<String>,
}

impl LimitDescriptor {
    fn new(label: RootSet, rs: &RootSystem, trace: Vec<String>) -> Self {
        let support = if label == rs.delta() { SupportKind::Interior } else { SupportKind::BoundaryHomogeneous };
        LimitDescriptor { label: Some(label), support, weyl: None, trace }
    }
}

/// Does `Lie(H)` lie in `Lie(γ P_J γ⁻¹)`? Exact, on integer generators.
pub fn contained_in_parabolic(gens: &[IntMatrix], rs: &RootSystem, set: RootSet, gamma: Option<&IntMatrix>) -> bool {
    let d = rs.dim();
    let blocks = rs.blocks(set);
    let block_of: Vec<usize> =
        (0..d).map(|i| blocks.iter().position(|&(a, b)| a <= i && i < b).unwrap()).collect();
    let ginv = gamma.map(|g| int_inverse(g, d));
    gens.iter().all(|x| {
        let y = match (gamma, &ginv) {
            (Some(g), Some(gi)) => int_mul(&int_mul(gi, x, d), g, d),
            _ => x.clone(),
        };
        (0..d).all(|i| (0..d).all(|j| block_of[i] <= block_of[j] || y[i * d + j] == 0))
    })
}

/// Standard parabolics `P_J` (conjugated by the subgroup conjugator, if any)
/// containing the subgroup.
pub fn parabolics_containing(spec: &SubgroupSpec, rs: &RootSystem) -> Result<Vec<ParabolicIndex>> {
    let plain = SubgroupSpec::new(spec.kind.clone());
    let gens = plain.lie_generators(rs)?;
    let conj = match &spec.conjugator {
        None => None,
        Some(c) => Some(GroupElement::from_integer(
            &(0..rs.dim()).map(|i| c[i * rs.dim()..(i + 1) * rs.dim()].to_vec()).collect::<Vec<_>>(),
            rs.factors(),
        )?),
    };
    Ok(RootSet::all(rs.rank())
        .filter(|&set| contained_in_parabolic(&gens, rs, set, None))
        .map(|set| ParabolicIndex { set, conjugator: conj.clone() })
        .collect())
}

/// Result of [`delta_truncated`].
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaValue {
    /// `f64::INFINITY` when no witness was found.
    pub value: f64,
    pub witness: Option<(IntMatrix, usize)>,
    pub truncated: bool,
    pub candidates: usize,
}

/// `min d_α(g⁻¹γ)` over enumerated `γ` (entries bounded by `height`) and
/// `α ∈ Δ` with `H ⊆ γ P_α γ⁻¹`. The value bounds the true infimum from
/// above.
pub fn delta_truncated(spec: &SubgroupSpec, rs: &RootSystem, g: &GroupElement, height: i64) -> Result<DeltaValue> {
    let gens = spec.lie_generators(rs)?;
    let d = rs.dim();
    let ginv = g.inverse();
    let mut best = DeltaValue { value: f64::INFINITY, witness: None, truncated: false, candidates: 0 };
    let mut it = GammaEnumerator::with_budget(d, height, crate::reduction::DEFAULT_VISIT_BUDGET);
    let block_diag = |m: &IntMatrix| {
        (0..d).all(|i| {
            (0..d).all(|j| {
                m[i * d + j] == 0
                    || (0..rs.factors().len()).any(|f| rs.factor_range(f).contains(&i) && rs.factor_range(f).contains(&j))
            })
        })
    };
    for gamma in it.by_ref() {
        if !block_diag(&gamma) {
            continue;
        }
        for alpha in 0..rs.rank() {
            let set = rs.delta().without(alpha);
            if !contained_in_parabolic(&gens, rs, set, Some(&gamma)) {
                continue;
            }
            best.candidates += 1;
            let gm = GroupElement::from_integer(
                &(0..d).map(|i| gamma[i * d..(i + 1) * d].to_vec()).collect::<Vec<_>>(),
                rs.factors(),
            )?;
            let v = d_function(rs, &ParabolicIndex::standard(set), &ginv.mul(&gm));
            if v < best.value {
                best.value = v;
                best.witness = Some((gamma.clone(), alpha));
            }
        }
    }
    best.truncated = it.truncated();
    Ok(best)
}

/// Coroot coefficients of the orthogonal projection of `v` onto the span of
/// the roots in `set`.
fn project_direction(rs: &RootSystem, v: &Direction, set: RootSet) -> Direction {
    let idx: Vec<usize> = set.iter().collect();
    if idx.is_empty() {
        return Direction::zero(rs.dim());
    }
    let gram = rs.pairing_matrix().principal(&idx);
    let rhs: Vec<Q> = idx.iter().map(|&k| rs.pair_root(v, k)).collect();
    let c = gram.solve(&rhs).expect("Gram matrix is invertible");
    let mut w = WeightVector { coords: vec![Q::zero(); rs.rank()] };
    for (t, &k) in idx.iter().enumerate() {
        w.coords[k] = c[t];
    }
    rs.weight_to_diag(&w)
}

/// `v^I`: the component of `v` in `Lie(A^I)`.
pub fn levi_component(rs: &RootSystem, v: &Direction, set: RootSet) -> Direction {
    project_direction(rs, v, set)
}

/// `v_I`: the component of `v` in `Lie(A_I)`.
pub fn center_component(rs: &RootSystem, v: &Direction, set: RootSet) -> Direction {
    v.sub(&project_direction(rs, v, set))
}

/// `⟨v^I, χ_α⟩ ≤ 0` for every `α ∈ Δ`.
pub fn unip_predicate(rs: &RootSystem, v: &Direction, set: RootSet) -> bool {
    let vi = levi_component(rs, v, set);
    rs.quasi_fundamental_weights().iter().all(|chi| !rs.pair_weight(&vi, chi).is_positive())
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnipCertificate {
    pub set: RootSet,
    /// `⟨v_I, α⟩` for each `α ∉ I`, all positive.
    pub escape_pairings: Vec<(usize, Q)>,
    /// Whether the maximal satisfying subset is unique.
    pub unique: bool,
}

/// Limit label for translates of the maximal unipotent subgroup by
/// `exp(n·v)`: the maximal `I` with `⟨v^I, χ_α⟩ ≤ 0` for all `α`.
pub fn unip_limit_i(rs: &RootSystem, v: &Direction) -> Result<UnipCertificate> {
    rs.check_direction(v)?;
    let ok: Vec<RootSet> = RootSet::all(rs.rank()).filter(|&s| unip_predicate(rs, v, s)).collect();
    let maximal: Vec<RootSet> =
        ok.iter().copied().filter(|&s| !ok.iter().any(|&t| t != s && s.is_subset(t))).collect();
    let set = *maximal.iter().max_by_key(|s| (s.len(), std::cmp::Reverse(s.0))).expect("∅ always qualifies");
    let vc = center_component(rs, v, set);
    let escape_pairings: Vec<(usize, Q)> =
        rs.delta().minus(set).iter().map(|k| (k, rs.pair_root(&vc, k))).collect();
    if let Some((k, x)) = escape_pairings.iter().find(|(_, x)| !x.is_positive()) {
        return Err(Error::Numerical(format!("certificate fails at a{}: pairing {x}", k + 1)));
    }
    Ok(UnipCertificate { set, escape_pairings, unique: maximal.len() == 1 })
}

/// Fundamental coweight `ϖ_k` in diagonal coordinates.
pub fn fundamental_coweight(rs: &RootSystem, k: usize) -> Direction {
    let f = rs.root_factor(k);
    let r = rs.factor_range(f);
    let n = r.len() as i128;
    let kk = (k - (r.start - f)) as i128;
    let mut v = vec![Q::zero(); rs.dim()];
    for (t, i) in r.enumerate() {
        v[i] = if (t as i128) <= kk { Q::new(n - kk - 1, n) } else { Q::new(-(kk + 1), n) };
    }
    Direction(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaSplit {
    pub face: ChamberFace,
    pub r_inf: RootSet,
    pub r_zero: RootSet,
    pub v_inf: Direction,
    pub v_zero: Direction,
    /// Label `J ∪ R_0` of the supporting parabolic `w P_{J∪R_0} w⁻¹`.
    pub label: RootSet,
}

/// Splits a translate `a_n = exp(n·v + offset)` of `A_I` along the chamber
/// containing it. `R_0` holds the roots constant along the sequence but not
/// identically 1 (offset pairing positive).
pub fn ma_split(rs: &RootSystem, v: &Direction, offset: &Direction, set: RootSet) -> Result<MaSplit> {
    rs.check_direction(v)?;
    rs.check_direction(offset)?;
    for k in set.iter() {
        if !rs.pair_root(v, k).is_zero() || !rs.pair_root(offset, k).is_zero() {
            return Err(Error::InvalidInput(format!("translate is not in A_I: pairs nontrivially with a{}", k + 1)));
        }
    }
    let face = rs.locate_chamber_pair(v, offset);
    let w = &face.w;
    let mut r_inf = RootSet::EMPTY;
    let mut r_zero = RootSet::EMPTY;
    for k in rs.delta().minus(face.set).iter() {
        if rs.pair_image_root(v, w, k).is_positive() {
            r_inf = r_inf.with(k);
        } else {
            r_zero = r_zero.with(k);
        }
    }
    let winv = w.inverse();
    let u = winv.act(v);
    let uo = winv.act(offset);
    let mut v_inf = Direction::zero(rs.dim());
    let mut v_zero = Direction::zero(rs.dim());
    for k in r_inf.iter() {
        v_inf = v_inf.add(&fundamental_coweight(rs, k).scale(rs.pair_root(&u, k)));
    }
    for k in r_zero.iter() {
        v_zero = v_zero.add(&fundamental_coweight(rs, k).scale(rs.pair_root(&uo, k)));
    }
    Ok(MaSplit {
        label: face.set.union(r_zero),
        face: face.clone(),
        r_inf,
        r_zero,
        v_inf: w.act(&v_inf),
        v_zero: w.act(&v_zero),
    })
}

/// `w·Lie(A_J) ⊆ Lie(A_I)`, exactly.
pub fn weyl_torus_inclusion(rs: &RootSystem, face: &ChamberFace, set: RootSet) -> bool {
    rs.delta().minus(face.set).iter().all(|k| {
        let x = face.w.act(&fundamental_coweight(rs, k));
        set.iter().all(|b| rs.pair_root(&x, b).is_zero())
    })
}

/// Limit for translates of `M^{nc}_α = M_{Δ∖{α}}`: escape toward `P_β`
/// (a vertex of the Levi sphere) when `⟨w⁻¹v_I, χ_β⟩ > 0`, else interior.
pub fn levi_translate_classify(rs: &RootSystem, alpha: usize, seq: &SequenceSpec) -> Result<LimitDescriptor> {
    let set = rs.delta().without(alpha);
    if seq.subgroup.kind != SubgroupKind::LeviSemisimpleNc(set) {
        return Err(Error::NotCovered(format!("subgroup is not the Levi factor for a{}", alpha + 1)));
    }
    rs.check_direction(&seq.direction)?;
    let mut trace = vec![format!("levi translate: H = M^nc for a{}", alpha + 1)];
    let vi = center_component(rs, &seq.direction, set);
    if vi.is_zero() {
        trace.push("center component of the direction vanishes: no escape".into());
        return Ok(LimitDescriptor::new(rs.delta(), rs, trace));
    }
    let chi = rs.quasi_fundamental_weights();
    let r = rs.rank();
    for face in rs.levi_sphere(set).into_iter().filter(|f| f.set.len() + 1 == r) {
        let beta = rs.delta().minus(face.set).iter().next().unwrap();
        let u = face.w.inverse().act(&vi);
        let p = rs.pair_weight(&u, &chi[beta]);
        if p.is_positive() {
            trace.push(format!("escape toward w P_{{a{}}} w^-1 with w = {}, <w^-1 v_I, chi> = {p}", beta + 1, face.w));
            trace.push("levi has no parabolic inside H_beta: no further degeneration".into());
            let mut out = LimitDescriptor::new(face.set, rs, trace);
            out.weyl = Some(face.w.clone());
            return Ok(out);
        }
    }
    trace.push("no vertex of the Levi sphere pairs positively: interior".into());
    Ok(LimitDescriptor::new(rs.delta(), rs, trace))
}

/// Per-factor limit for products of `SL_2`: factors with subgroup `SL_2`,
/// non-escaping unipotent, or non-escaping trivial kinds stay in `J`.
pub fn sl2r_classify(rs: &RootSystem, seq: &SequenceSpec) -> Result<LimitDescriptor> {
    if rs.factors().iter().any(|&n| n != 2) {
        return Err(Error::NotCovered("product classifier needs SL_2 factors".into()));
    }
    seq.validate(rs)?;
    if seq.subgroup.conjugator.is_some() {
        return Err(Error::NotCovered("conjugated product subgroups are not encoded".into()));
    }
    let kinds: Vec<SubgroupKind> = match &seq.subgroup.kind {
        SubgroupKind::Product(v) => v.clone(),
        k if rs.rank() == 1 => vec![k.clone()],
        _ => return Err(Error::NotCovered("product classifier needs a product subgroup".into())),
    };
    let offset = match &seq.bounded {
        BoundedPart::Fixed { offset, .. } => offset.clone(),
        _ => return Err(Error::NotCovered("reduced Levi coordinates do not apply to products".into())),
    };
    let mut set = RootSet::EMPTY;
    let mut trace = Vec::new();
    let (mut s, mut um, mut up, mut tm, mut tp) = (vec![], vec![], vec![], vec![], vec![]);
    for (f, kind) in kinds.iter().enumerate() {
        let t = rs.pair_root(&seq.direction, f);
        match kind {
            SubgroupKind::EmbeddedSl2(0) => {
                s.push(f + 1);
                set = set.with(f);
            }
            SubgroupKind::FullUnipotentRadical(x) if x.is_empty() => {
                if t.is_positive() {
                    up.push(f + 1);
                } else {
                    um.push(f + 1);
                    set = set.with(f);
                }
            }
            SubgroupKind::Trivial => {
                if t.is_zero() {
                    tm.push(f + 1);
                    set = set.with(f);
                } else {
                    tp.push(f + 1);
                }
            }
            other => return Err(Error::NotCovered(format!("factor {} kind {other} is not sl2/unipotent/trivial", f + 1))),
        }
    }
    let _ = offset;
    trace.push(format!("I^s = {s:?}, I^u_- = {um:?}, I^u_+ = {up:?}, I^t_- = {tm:?}, I^t_+ = {tp:?}"));
    trace.push(format!("J = I^s + I^u_- + I^t_- = {set}"));
    let mut out = LimitDescriptor::new(set, rs, trace);
    if set.is_empty() && kinds.iter().all(|k| *k == SubgroupKind::Trivial) {
        out.support = SupportKind::DiracPoint;
        out.trace.push("every factor trivial and escaping: point mass on the full flag boundary".into());
    }
    Ok(out)
}

/// Data the `SL_3` tree reads, in the α₂-escape normal form.
#[derive(Clone, Debug)]
struct NormalForm {
    v: [Q; 3],
    /// Coordinates `(i, j)` spanning `Lie(H) ⊆ 𝔫_∅`.
    coords: Vec<(usize, usize)>,
    /// `s ∈ N_β`, i.e. the (2,3) entry of the unipotent part vanishes.
    s_in_n_beta: bool,
    reduced: Option<(Q, f64)>,
}

fn swap_coord((i, j): (usize, usize)) -> (usize, usize) {
    (2 - j, 2 - i)
}

fn unipotent_coords(kind: &SubgroupKind, rs: &RootSystem) -> Option<Vec<(usize, usize)>> {
    match kind {
        SubgroupKind::FullUnipotentRadical(s) => Some(crate::lingrp::nilradical_basis(rs, *s)),
        SubgroupKind::OneParamUnipotent(i, j) => Some(vec![(*i, *j)]),
        SubgroupKind::Trivial => Some(Vec::new()),
        _ => None,
    }
}

/// Classifier for `SL_3`: the case tree for unipotent subgroups in the
/// α-escape normal form, delegating Levi subgroups and the maximal
/// unipotent subgroup outside the normal form to their dedicated theorems.
pub fn sl3_classify(rs: &RootSystem, seq: &SequenceSpec) -> Result<LimitDescriptor> {
    if rs.factors() != [3] {
        return Err(Error::NotCovered("the SL_3 case tree needs a single SL_3 factor".into()));
    }
    seq.validate(rs)?;
    if seq.subgroup.conjugator.is_some() {
        return Err(Error::NotCovered(
            "conjugated subgroup without matching translate; record the conjugator on the sequence instead".into(),
        ));
    }
    if let SubgroupKind::LeviSemisimpleNc(set) = seq.subgroup.kind {
        if set.len() == 1 {
            let alpha = rs.delta().minus(set).iter().next().unwrap();
            if matches!(seq.bounded, BoundedPart::ReducedLevi { .. }) {
                return Err(Error::NotCovered("reduced Levi coordinates need a unipotent subgroup".into()));
            }
            return levi_translate_classify(rs, alpha, seq);
        }
    }
    let Some(coords) = unipotent_coords(&seq.subgroup.kind, rs) else {
        return Err(Error::NotCovered(format!(
            "subgroup kind {} is not covered by the SL_3 tree as encoded",
            seq.subgroup.kind
        )));
    };
    let v = [seq.direction.0[0], seq.direction.0[1], seq.direction.0[2]];
    if v.iter().all(Zero::is_zero) {
        let mut trace = vec!["direction is zero: bounded translates, no escape".to_string()];
        if let BoundedPart::ReducedLevi { rate, .. } = &seq.bounded {
            if !rate.is_zero() {
                return Err(Error::NotCovered("reduced Levi data with zero direction".into()));
            }
        }
        trace.push("delta stays bounded below".into());
        return Ok(LimitDescriptor::new(rs.delta(), rs, trace));
    }
    let (s_in_n_beta_direct, s_in_n_beta_swapped, reduced) = match &seq.bounded {
        BoundedPart::Fixed { unipotent, .. } => {
            let entry = |i, j| unipotent.iter().find(|(c, _)| *c == (i, j)).map(|(_, x)| *x).unwrap_or_default();
            (entry(1, 2).is_zero(), entry(0, 1).is_zero(), None)
        }
        BoundedPart::ReducedLevi { u, rate, v0 } => (u[2] == 0.0, false, Some((*rate, *v0))),
    };
    let p = -v[2] / q(2);
    let mut trace = Vec::new();
    let nf = if p.is_positive() {
        trace.push("normal form: a2 escapes along A_alpha".to_string());
        NormalForm { v, coords, s_in_n_beta: s_in_n_beta_direct, reduced }
    } else if v[0].is_positive() && reduced.is_none() {
        trace.push("normal form: a1 escapes; apply the outer automorphism g -> w0 g^-T w0^-1".to_string());
        NormalForm {
            v: [-v[2], -v[1], -v[0]],
            coords: coords.iter().map(|&c| swap_coord(c)).collect(),
            s_in_n_beta: s_in_n_beta_swapped,
            reduced: None,
        }
    } else if seq.subgroup.kind == SubgroupKind::FullUnipotentRadical(RootSet::EMPTY) {
        let cert = unip_limit_i(rs, &seq.direction)?;
        trace.push("direction outside the alpha-escape normal form; maximal unipotent subgroup".into());
        trace.push(format!("maximal I with bounded characters: {}", cert.set));
        return Ok(LimitDescriptor::new(cert.set, rs, trace));
    } else {
        return Err(Error::NotCovered(
            "direction is outside the alpha-escape normal form of the SL_3 tree".into(),
        ));
    };
    let out = sl3_tree(&nf, &mut trace)?;
    let swapped = !p.is_positive();
    let label = out.map(|l| if swapped { swap_label(l) } else { l });
    let mut d = match label {
        Some(l) => LimitDescriptor::new(l, rs, trace),
        None => LimitDescriptor { label: None, support: SupportKind::DiracPoint, weyl: None, trace },
    };
    if swapped {
        d.trace.push("map the label back through the outer automorphism".into());
    }
    Ok(d)
}

fn swap_label(s: RootSet) -> RootSet {
    let mut out = RootSet::EMPTY;
    if s.contains(0) {
        out = out.with(1);
    }
    if s.contains(1) {
        out = out.with(0);
    }
    out
}

const P_BETA: RootSet = RootSet(0b10);
const P_ALPHA: RootSet = RootSet(0b01);
const P_EMPTY: RootSet = RootSet(0);

/// Walks the tree; `None` means a point mass whose parabolic is found only
/// along a subsequence.
fn sl3_tree(nf: &NormalForm, trace: &mut Vec<String>) -> Result<Option<RootSet>> {
    let [v1, v2, v3] = nf.v;
    let p = -v3 / q(2);
    let qq = (v1 - v2) / q(2);
    let has = |c: (usize, usize)| nf.coords.contains(&c);
    let in_n_beta = !has((1, 2));
    trace.push(format!("log-rates: x ~ exp({p} n), y ~ exp({qq} n)"));
    if !qq.is_positive() {
        if nf.reduced.is_some() {
            return Err(Error::NotCovered("reduced Levi data requires beta(b_n) to grow".into()));
        }
        if qq.is_negative() && !has((0, 1)) {
            return Err(Error::NotCovered(
                "beta(b_n) -> 0 with no a1 horocycle in H: needs an M_alpha(Z) conjugation first".into(),
            ));
        }
        trace.push("criterion on M_alpha holds: delta_{K_alpha,{beta}} bounded below".into());
        trace.push("P = P_alpha".into());
        return Ok(Some(P_ALPHA));
    }
    trace.push("beta(b_n) -> infinity".into());
    let alpha_ba = v2 - v3;
    if alpha_ba.is_positive() {
        if nf.reduced.is_some() {
            return Err(Error::NotCovered("reduced Levi data requires c = 0".into()));
        }
        trace.push("alpha(b_n a_n) -> infinity: P = P_empty".into());
        return Ok(Some(P_EMPTY));
    }
    let c_positive = alpha_ba.is_zero();
    trace.push(if c_positive { "alpha(b_n a_n) -> c in (0, inf)".into() } else { "alpha(b_n a_n) -> c = 0".to_string() });
    trace.push(format!("beta(alpha_n) = (y_n x_n)^(3/2) grows at rate {}", (qq + p) * Q::new(3, 2)));
    if !in_n_beta {
        if nf.reduced.is_some() {
            return Err(Error::NotCovered("reduced Levi data requires H inside N_beta".into()));
        }
        trace.push("Case 1: H not contained in N_beta".into());
        trace.push("P = P_beta".into());
        return Ok(Some(P_BETA));
    }
    trace.push("Case 2: H contained in N_beta".into());
    if c_positive {
        if nf.reduced.is_some() {
            return Err(Error::NotCovered("reduced Levi data requires c = 0".into()));
        }
        trace.push("Case 2.1: c in (0, inf)".into());
        trace.push("P = P_beta".into());
        return Ok(Some(P_BETA));
    }
    trace.push("Case 2.2: c = 0".into());
    let Some((rate, _v0)) = nf.reduced else {
        if nf.s_in_n_beta {
            trace.push("Case 2.2.1: s_n in N_beta; conjugate by eta".into());
            trace.push(format!(
                "alpha(eta b a eta^-1) = alpha(beta_n)^-1 -> inf, beta(eta b a eta^-1) = y_n x_n^3 (rate {})",
                qq + p * q(3)
            ));
            trace.push("P = P_empty".into());
            return Ok(Some(P_EMPTY));
        }
        return Err(Error::NotCovered(
            "Case 2.2.2 needs the reduced M_beta coordinates (u_n, v_n); supply a reduced_levi bounded part".into(),
        ));
    };
    trace.push("Case 2.2.2: s_n not in N_beta, reduced to u_n in [0,1], v_n >= 2/sqrt(3)".into());
    if rate.is_negative() {
        return Err(Error::NotCovered("v_n must stay bounded below".into()));
    }
    if rate.is_zero() {
        trace.push("Case 2.2.2.1: v_n bounded".into());
        trace.push("P = P_beta".into());
        return Ok(Some(P_BETA));
    }
    trace.push("Case 2.2.2.2: v_n -> infinity".into());
    let z_rate = v1 * Q::new(3, 2);
    let growth = z_rate - rate;
    trace.push(format!("log beta(c_n alpha_n) grows at rate {growth}"));
    if growth.is_positive() {
        trace.push("Case 2.2.2.2.1: beta(c_n alpha_n) -> infinity".into());
        trace.push("P = P_empty".into());
        return Ok(Some(P_EMPTY));
    }
    if growth.is_zero() {
        trace.push("Case 2.2.2.2.2: beta(c_n alpha_n) -> d in (0, inf)".into());
        trace.push("P = P_alpha".into());
        return Ok(Some(P_ALPHA));
    }
    trace.push("Case 2.2.2.2.3: beta(c_n alpha_n) -> 0".into());
    if has((0, 1)) {
        trace.push("Case 2.2.2.2.3.1: H not inside the center of N_empty".into());
        trace.push("P = P_alpha".into());
        return Ok(Some(P_ALPHA));
    }
    trace.push("Case 2.2.2.2.3.2: H inside the center of N_empty".into());
    trace.push("limit is a Dirac measure on a boundary point; P located along a subsequence".into());
    Ok(None)
}

/// `β(α_n)` from the `A_β`-component of `exp(n·v)` against the closed form
/// `(y_n x_n)^{3/2}`; returns `(evaluated, closed_form)`.
pub fn case1_growth(rs: &RootSystem, v: &Direction, n: u32) -> Result<(f64, f64)> {
    let vf = v.to_f64();
    let nf = n as f64;
    let g = GroupElement::exp_diag(&vf.iter().map(|x| x * nf).collect::<Vec<_>>(), rs.factors());
    let parts = langlands(&g, rs, &ParabolicIndex::standard(RootSet::single(1)))?;
    let evaluated = parts.a[0] / parts.a[1];
    let p = -vf[2] / 2.0;
    let qq = (vf[0] - vf[1]) / 2.0;
    let closed = ((qq + p) * nf * 1.5).exp();
    Ok((evaluated, closed))
}

/// Dispatches to the classifier matching the group and subgroup.
pub fn classify(rs: &RootSystem, seq: &SequenceSpec) -> Result<LimitDescriptor> {
    if rs.factors().iter().all(|&n| n == 2) && rs.rank() >= 1 && matches!(seq.subgroup.kind, SubgroupKind::Product(_)) {
        return sl2r_classify(rs, seq);
    }
    if rs.factors() == [3] {
        return sl3_classify(rs, seq);
    }
    seq.validate(rs)?;
    match &seq.subgroup.kind {
        SubgroupKind::FullUnipotentRadical(s) if s.is_empty() && seq.subgroup.conjugator.is_none() => {
            let cert = unip_limit_i(rs, &seq.direction)?;
            let trace = vec![
                "maximal unipotent subgroup translated by exp(n v)".to_string(),
                format!("maximal I with bounded characters: {}", cert.set),
            ];
            Ok(LimitDescriptor::new(cert.set, rs, trace))
        }
        SubgroupKind::LeviSemisimpleNc(s) if s.len() + 1 == rs.rank() && rs.factors().len() == 1 => {
            let alpha = rs.delta().minus(*s).iter().next().unwrap();
            levi_translate_classify(rs, alpha, seq)
        }
        SubgroupKind::Trivial | SubgroupKind::EmbeddedSl2(_) if rs.factors().len() == 1 && rs.rank() == 1 => {
            sl2r_classify(rs, &SequenceSpec { subgroup: SubgroupSpec::new(SubgroupKind::Product(vec![seq.subgroup.kind.clone()])), ..seq.clone() })
        }
        other => Err(Error::NotCovered(format!("no classifier covers subgroup {other} in this group"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qf;
    use num_traits::One;

    fn dir(xs: &[(i128, i128)]) -> Direction {
        Direction(xs.iter().map(|&(a, b)| qf(a, b)).collect())
    }

    fn sl3() -> RootSystem {
        RootSystem::type_a(3).unwrap()
    }

    #[test]
    fn unip_examples() {
        let rs = sl3();
        assert_eq!(unip_limit_i(&rs, &Direction::zero(3)).unwrap().set, rs.delta());
        assert_eq!(unip_limit_i(&rs, &dir(&[(1, 1), (0, 1), (-1, 1)])).unwrap().set, RootSet::EMPTY);
        assert_eq!(unip_limit_i(&rs, &dir(&[(2, 1), (-1, 1), (-1, 1)])).unwrap().set, RootSet::single(1));
    }

    #[test]
    fn parabolics_for_catalog() {
        let rs = sl3();
        let n = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
        assert_eq!(parabolics_containing(&n, &rs).unwrap().len(), 4);
        let m = SubgroupSpec::new(SubgroupKind::LeviSemisimpleNc(RootSet::single(0)));
        let sets: Vec<RootSet> = parabolics_containing(&m, &rs).unwrap().iter().map(|p| p.set).collect();
        assert_eq!(sets, vec![RootSet::single(0), rs.delta()]);
        let t = SubgroupSpec::new(SubgroupKind::Trivial);
        assert_eq!(parabolics_containing(&t, &rs).unwrap().len(), 4);
    }

    #[test]
    fn delta_examples() {
        let rs = sl3();
        let id = GroupElement::identity(&[3]);
        let whole = SubgroupSpec::new(SubgroupKind::Whole);
        assert!(delta_truncated(&whole, &rs, &id, 1).unwrap().value.is_infinite());
        let m = SubgroupSpec::new(SubgroupKind::LeviSemisimpleNc(RootSet::single(0)));
        let d = delta_truncated(&m, &rs, &id, 1).unwrap();
        assert!(d.value.is_finite() && d.witness.is_some());
        let n = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
        let d = delta_truncated(&n, &rs, &id, 1).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ma_split_examples() {
        let rs = sl3();
        let z = Direction::zero(3);
        let s = ma_split(&rs, &z, &z, RootSet::EMPTY).unwrap();
        assert_eq!(s.face.set, rs.delta());
        assert!(s.r_inf.is_empty() && s.r_zero.is_empty());
        let v = dir(&[(1, 1), (0, 1), (-1, 1)]);
        let s = ma_split(&rs, &v, &z, RootSet::EMPTY).unwrap();
        assert_eq!(s.face.w, rs.weyl_identity());
        assert_eq!(s.r_inf, rs.delta());
        let s = ma_split(&rs, &v.scale(q(-1)), &z, RootSet::EMPTY).unwrap();
        assert_eq!(s.face.w, WeylElement::longest(&rs));
        assert_eq!(s.r_inf, rs.delta());
        assert!(weyl_torus_inclusion(&rs, &s.face, RootSet::EMPTY));
    }

    #[test]
    fn levi_examples() {
        let rs = sl3();
        let spec = SubgroupSpec::new(SubgroupKind::LeviSemisimpleNc(RootSet::single(0)));
        let seq = SequenceSpec::new(spec.clone(), Direction::zero(3), vec![1]);
        assert_eq!(levi_translate_classify(&rs, 1, &seq).unwrap().label, Some(rs.delta()));
        let seq = SequenceSpec::new(spec, dir(&[(1, 1), (1, 1), (-2, 1)]), vec![1]);
        let d = levi_translate_classify(&rs, 1, &seq).unwrap();
        assert_eq!(d.label, Some(RootSet::single(0)));
    }

    #[test]
    fn sl2r_examples() {
        let rs = RootSystem::product(&[2, 2]).unwrap();
        let k: SubgroupKind = "product[unipotent, trivial]".parse().unwrap();
        let seq = SequenceSpec::new(SubgroupSpec::new(k), dir(&[(1, 1), (-1, 1), (0, 1), (0, 1)]), vec![1]);
        assert_eq!(sl2r_classify(&rs, &seq).unwrap().label, Some(RootSet::single(1)));
        let k: SubgroupKind = "product[sl2, sl2]".parse().unwrap();
        let seq = SequenceSpec::new(SubgroupSpec::new(k), dir(&[(1, 1), (-1, 1), (2, 1), (-2, 1)]), vec![1]);
        assert_eq!(sl2r_classify(&rs, &seq).unwrap().label, Some(rs.delta()));
    }

    #[test]
    fn sl3_tree_branches() {
        let rs = sl3();
        let n_beta = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::single(1)));
        let full = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
        let v = dir(&[(6, 5), (-11, 10), (-1, 10)]);
        let d = sl3_classify(&rs, &SequenceSpec::new(full, v.clone(), vec![10])).unwrap();
        assert_eq!(d.label, Some(RootSet::single(1)));
        assert!(d.trace.iter().any(|t| t.starts_with("Case 1")));
        let d = sl3_classify(&rs, &SequenceSpec::new(n_beta.clone(), dir(&[(13, 10), (-6, 5), (-1, 10)]), vec![10]))
            .unwrap();
        assert_eq!(d.label, Some(RootSet::EMPTY));
        let mut seq = SequenceSpec::new(n_beta, v, vec![10]);
        seq.bounded = BoundedPart::ReducedLevi { u: [0.0, 0.0, 0.3], rate: qf(3, 5), v0: 1.0 };
        assert_eq!(sl3_classify(&rs, &seq).unwrap().label, Some(RootSet::EMPTY));
        let center = SubgroupSpec::new(SubgroupKind::OneParamUnipotent(0, 2));
        let mut seq = SequenceSpec::new(center, dir(&[(1, 10), (-3, 40), (-1, 40)]), vec![10]);
        seq.bounded = BoundedPart::ReducedLevi { u: [0.0; 3], rate: qf(23, 20), v0: 1.0 };
        let d = sl3_classify(&rs, &seq).unwrap();
        assert_eq!(d.support, SupportKind::DiracPoint);
        assert_eq!(d.label, None);
    }

    #[test]
    fn growth_law() {
        let rs = sl3();
        let (a, b) = case1_growth(&rs, &dir(&[(6, 5), (-11, 10), (-1, 10)]), 7).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coweights_dual_to_roots() {
        let rs = RootSystem::product(&[3, 4]).unwrap();
        for k in 0..rs.rank() {
            let w = fundamental_coweight(&rs, k);
            rs.check_direction(&w).unwrap();
            for j in 0..rs.rank() {
                assert_eq!(rs.pair_root(&w, j), if j == k { Q::one() } else { Q::zero() });
            }
        }
    }
}
