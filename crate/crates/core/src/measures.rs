//! Catalog of subgroups carrying homogeneous probability measures, samplers
//! for fundamental domains of `Γ∩H\H`, pushforward by right translation, and
//! empirical escape statistics of the reduced points.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lingrp::{nilradical_basis, GroupElement};
use crate::reduction::{integer_det, reduce, ReducedPoint};
use crate::rootsys::{RootSet, RootSystem};

/// Samples per independent RNG stream. Fixed so results do not depend on
/// the number of workers.
pub const BLOCK_SIZE: usize = 4096;
pub const DEFAULT_Y_CAP: f64 = 1e4;
pub const DEFAULT_T_ESC: f64 = 1e3;

/// Integer matrix, row-major.
pub type IntMatrix = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubgroupKind {
    /// `N_{P_I}`; `I = ∅` is the maximal unipotent subgroup.
    FullUnipotentRadical(RootSet),
    /// Semisimple part of the Levi `M_I`; `M^{nc}_α` is `I = Δ∖{α}`.
    LeviSemisimpleNc(RootSet),
    /// `SL_2` on the coordinates of simple root `k`.
    EmbeddedSl2(usize),
    /// `{1 + t E_ij}`, `i < j`.
    OneParamUnipotent(usize, usize),
    Trivial,
    /// The whole group; usable for containment questions only.
    Whole,
    /// One kind per simple factor, each relative to that factor.
    Product(Vec<SubgroupKind>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupSpec {
    pub kind: SubgroupKind,
    /// `γ` with the described group `γ H γ⁻¹`.
    pub conjugator: Option<IntMatrix>,
}

impl SubgroupSpec {
    pub fn new(kind: SubgroupKind) -> Self {
        SubgroupSpec { kind, conjugator: None }
    }

    pub fn conjugated(kind: SubgroupKind, gamma: IntMatrix) -> Self {
        SubgroupSpec { kind, conjugator: Some(gamma) }
    }

    /// Structural checks: indices in range, conjugator in `Γ`.
    pub fn validate(&self, rs: &RootSystem) -> Result<()> {
        validate_kind(&self.kind, rs)?;
        if let Some(c) = &self.conjugator {
            let d = rs.dim();
            if c.len() != d * d {
                return Err(Error::InvalidInput(format!("conjugator needs {} entries", d * d)));
            }
            if integer_det(c, d) != 1 {
                return Err(Error::InvalidInput("conjugator must have determinant 1".into()));
            }
            if !block_diagonal_int(c, rs) {
                return Err(Error::InvalidInput("conjugator must preserve the factors".into()));
            }
        }
        Ok(())
    }

    /// Integer basis of `Lie(H)` (after conjugation), `d×d` row-major.
    pub fn lie_generators(&self, rs: &RootSystem) -> Result<Vec<IntMatrix>> {
        self.validate(rs)?;
        let d = rs.dim();
        let gens = kind_generators(&self.kind, rs)?;
        Ok(match &self.conjugator {
            None => gens,
            Some(c) => {
                let cinv = int_inverse(c, d);
                gens.iter().map(|x| int_mul(&int_mul(c, x, d), &cinv, d)).collect()
            }
        })
    }

    pub fn is_unipotent(&self) -> bool {
        kind_is_unipotent(&self.kind)
    }
}

fn kind_is_unipotent(k: &SubgroupKind) -> bool {
    match k {
        SubgroupKind::FullUnipotentRadical(_)
        | SubgroupKind::OneParamUnipotent(..)
        | SubgroupKind::Trivial => true,
        SubgroupKind::Product(v) => v.iter().all(kind_is_unipotent),
        _ => false,
    }
}

fn validate_kind(kind: &SubgroupKind, rs: &RootSystem) -> Result<()> {
    let d = rs.dim();
    match kind {
        SubgroupKind::FullUnipotentRadical(s) | SubgroupKind::LeviSemisimpleNc(s) => {
            if !s.is_subset(rs.delta()) {
                return Err(Error::InvalidInput(format!("root set {s} not inside Δ")));
            }
        }
        SubgroupKind::EmbeddedSl2(k) => {
            if *k >= rs.rank() {
                return Err(Error::InvalidInput(format!("root index {} out of range", k + 1)));
            }
        }
        SubgroupKind::OneParamUnipotent(i, j) => {
            if !(i < j && *j < d) || !same_factor(rs, *i, *j) {
                return Err(Error::InvalidInput(format!(
                    "one-parameter coordinate ({}, {}) is not an upper entry of one factor",
                    i + 1,
                    j + 1
                )));
            }
        }
        SubgroupKind::Trivial | SubgroupKind::Whole => {}
        SubgroupKind::Product(list) => {
            if list.len() != rs.factors().len() {
                return Err(Error::InvalidInput(format!(
                    "product lists {} kinds for {} factors",
                    list.len(),
                    rs.factors().len()
                )));
            }
            for (f, k) in list.iter().enumerate() {
                if matches!(k, SubgroupKind::Product(_)) {
                    return Err(Error::InvalidInput("nested products are not supported".into()));
                }
                validate_kind(k, &RootSystem::type_a(rs.factors()[f])?)?;
            }
        }
    }
    Ok(())
}

fn same_factor(rs: &RootSystem, i: usize, j: usize) -> bool {
    (0..rs.factors().len()).any(|f| {
        let r = rs.factor_range(f);
        r.contains(&i) && r.contains(&j)
    })
}

fn block_diagonal_int(c: &[i64], rs: &RootSystem) -> bool {
    let d = rs.dim();
    (0..d).all(|i| (0..d).all(|j| same_factor(rs, i, j) || c[i * d + j] == 0))
}

fn unit(d: usize, i: usize, j: usize) -> IntMatrix {
    let mut m = vec![0; d * d];
    m[i * d + j] = 1;
    m
}

fn cartan_element(d: usize, i: usize) -> IntMatrix {
    let mut m = vec![0; d * d];
    m[i * d + i] = 1;
    m[(i + 1) * d + i + 1] = -1;
    m
}

fn kind_generators(kind: &SubgroupKind, rs: &RootSystem) -> Result<Vec<IntMatrix>> {
    let d = rs.dim();
    Ok(match kind {
        SubgroupKind::FullUnipotentRadical(s) => {
            nilradical_basis(rs, *s).into_iter().map(|(i, j)| unit(d, i, j)).collect()
        }
        SubgroupKind::LeviSemisimpleNc(s) => {
            let mut out = Vec::new();
            for (a, b) in rs.blocks(*s) {
                for i in a..b {
                    for j in a..b {
                        if i != j {
                            out.push(unit(d, i, j));
                        }
                    }
                    if i + 1 < b {
                        out.push(cartan_element(d, i));
                    }
                }
            }
            out
        }
        SubgroupKind::EmbeddedSl2(k) => {
            let (i, j) = rs.root_coords(*k);
            vec![unit(d, i, j), unit(d, j, i), cartan_element(d, i)]
        }
        SubgroupKind::OneParamUnipotent(i, j) => vec![unit(d, *i, *j)],
        SubgroupKind::Trivial => Vec::new(),
        SubgroupKind::Whole => {
            let mut out = Vec::new();
            for f in 0..rs.factors().len() {
                let r = rs.factor_range(f);
                for i in r.clone() {
                    for j in r.clone() {
                        if i != j {
                            out.push(unit(d, i, j));
                        }
                    }
                    if i + 1 < r.end {
                        out.push(cartan_element(d, i));
                    }
                }
            }
            out
        }
        SubgroupKind::Product(list) => {
            let mut out = Vec::new();
            for (f, k) in list.iter().enumerate() {
                let sub = RootSystem::type_a(rs.factors()[f])?;
                let off = rs.factor_range(f).start;
                let b = sub.dim();
                for g in kind_generators(k, &sub)? {
                    let mut m = vec![0; d * d];
                    for i in 0..b {
                        for j in 0..b {
                            m[(off + i) * d + off + j] = g[i * b + j];
                        }
                    }
                    out.push(m);
                }
            }
            out
        }
    })
}

pub fn int_mul(a: &[i64], b: &[i64], d: usize) -> IntMatrix {
    let mut out = vec![0; d * d];
    for i in 0..d {
        for k in 0..d {
            let x = a[i * d + k];
            if x == 0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += x * b[k * d + j];
            }
        }
    }
    out
}

/// Inverse of a determinant-one integer matrix (its adjugate).
pub fn int_inverse(a: &[i64], d: usize) -> IntMatrix {
    let mut out = vec![0; d * d];
    for i in 0..d {
        for j in 0..d {
            let minor: Vec<i64> = (0..d)
                .filter(|&r| r != j)
                .flat_map(|r| (0..d).filter(move |&c| c != i).map(move |c| (r, c)))
                .map(|(r, c)| a[r * d + c])
                .collect();
            let s = if (i + j) % 2 == 0 { 1 } else { -1 };
            out[i * d + j] = s * if d == 1 { 1 } else { integer_det(&minor, d - 1) };
        }
    }
    out
}

impl fmt::Display for SubgroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupKind::FullUnipotentRadical(s) => write!(f, "full_unipotent_radical{s}"),
            SubgroupKind::LeviSemisimpleNc(s) => write!(f, "levi_semisimple_nc{s}"),
            SubgroupKind::EmbeddedSl2(k) => write!(f, "embedded_sl2({})", k + 1),
            SubgroupKind::OneParamUnipotent(i, j) => write!(f, "one_param_unipotent({},{})", i + 1, j + 1),
            SubgroupKind::Trivial => write!(f, "trivial"),
            SubgroupKind::Whole => write!(f, "whole"),
            SubgroupKind::Product(v) => {
                let parts: Vec<String> = v.iter().map(|k| k.to_string()).collect();
                write!(f, "product[{}]", parts.join(", "))
            }
        }
    }
}

impl FromStr for SubgroupKind {
    type Err = Error;

    /// Grammar, with 1-based indices and root sets written `{a1,a2}`:
    /// `full_unipotent_radical{..}`, `levi_semisimple_nc{..}`,
    /// `embedded_sl2(k)`, `one_param_unipotent(i,j)`, `trivial`, `whole`,
    /// `product[k1, k2, ...]`. Inside a product the shorthands `sl2`,
    /// `unipotent` are accepted.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown subgroup kind {s:?}"));
        if let Some(rest) = s.strip_prefix("product") {
            let body = rest.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
            let mut items = Vec::new();
            for part in split_top_level(body) {
                let k = match part.trim() {
                    "sl2" => SubgroupKind::EmbeddedSl2(0),
                    "unipotent" => SubgroupKind::FullUnipotentRadical(RootSet::EMPTY),
                    other => other.parse()?,
                };
                items.push(k);
            }
            return Ok(SubgroupKind::Product(items));
        }
        let set_arg = |name: &str| -> Option<Result<RootSet>> {
            s.strip_prefix(name).map(|r| RootSet::parse(r, 64))
        };
        if let Some(r) = set_arg("full_unipotent_radical") {
            return r.map(SubgroupKind::FullUnipotentRadical);
        }
        if let Some(r) = set_arg("levi_semisimple_nc") {
            return r.map(SubgroupKind::LeviSemisimpleNc);
        }
        let int_args = |name: &str| -> Option<Result<Vec<usize>>> {
            let r = s.strip_prefix(name)?.trim();
            let body = r.strip_prefix('(').and_then(|r| r.strip_suffix(')'))?;
            Some(
                body.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .ok()
                            .filter(|&x| x >= 1)
                            .map(|x| x - 1)
                            .ok_or_else(|| Error::Parse(format!("bad index {t:?} in {s:?}")))
                    })
                    .collect(),
            )
        };
        if let Some(r) = int_args("embedded_sl2") {
            let v = r?;
            return if v.len() == 1 { Ok(SubgroupKind::EmbeddedSl2(v[0])) } else { Err(bad()) };
        }
        if let Some(r) = int_args("one_param_unipotent") {
            let v = r?;
            return if v.len() == 2 { Ok(SubgroupKind::OneParamUnipotent(v[0], v[1])) } else { Err(bad()) };
        }
        match s {
            "trivial" => Ok(SubgroupKind::Trivial),
            "whole" => Ok(SubgroupKind::Whole),
            _ => Err(bad()),
        }
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(&s[start..]);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerOptions {
    /// Height cap for fundamental domains of `SL_2(ℤ)`.
    pub y_cap: f64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        SamplerOptions { y_cap: DEFAULT_Y_CAP }
    }
}

/// Probability mass of the modular fundamental domain above `y_cap`.
pub fn truncation_loss(y_cap: f64) -> f64 {
    3.0 / (std::f64::consts::PI * y_cap)
}

/// `E[1/y]` for the hyperbolic probability measure on the fundamental domain
/// truncated at `y_cap`.
pub fn expected_inverse_height(y_cap: f64) -> f64 {
    let y2 = y_cap * y_cap;
    (3f64.ln() / 2.0 - 1.0 / (2.0 * y2)) / (std::f64::consts::PI / 3.0 - 1.0 / y_cap)
}

/// One point `x + iy` of the truncated modular fundamental domain, density
/// `dx dy / y²`.
pub fn sample_modular_point<R: Rng + ?Sized>(rng: &mut R, y_cap: f64) -> (f64, f64) {
    let lo = 3f64.sqrt() / 2.0;
    let (ilo, ihi) = (1.0 / lo, 1.0 / y_cap);
    loop {
        let x = rng.random_range(-0.5..0.5);
        let u: f64 = rng.random();
        let y = 1.0 / (ilo - u * (ilo - ihi));
        if x * x + y * y >= 1.0 {
            return (x, y);
        }
    }
}

/// `n(x) a(y) k(θ)` with `θ` uniform: Haar measure on `SL_2(ℤ)\SL_2(ℝ)`.
fn sample_sl2_block<R: Rng + ?Sized>(rng: &mut R, y_cap: f64) -> [f64; 4] {
    let (x, y) = sample_modular_point(rng, y_cap);
    let th = rng.random_range(0.0..std::f64::consts::TAU);
    let (s, c) = th.sin_cos();
    let r = y.sqrt();
    // [[1,x],[0,1]] · diag(r, 1/r) · [[c,-s],[s,c]]
    let (a, b, cc, d) = (r, x / r, 0.0, 1.0 / r);
    [a * c + b * s, -a * s + b * c, cc * c + d * s, -cc * s + d * c]
}

fn sample_kind<R: Rng + ?Sized>(
    kind: &SubgroupKind,
    rs: &RootSystem,
    opts: &SamplerOptions,
    rng: &mut R,
    out: &mut DMatrix<f64>,
    off: usize,
) -> Result<()> {
    let embed_sl2 = |out: &mut DMatrix<f64>, i: usize, m: [f64; 4]| {
        out[(off + i, off + i)] = m[0];
        out[(off + i, off + i + 1)] = m[1];
        out[(off + i + 1, off + i)] = m[2];
        out[(off + i + 1, off + i + 1)] = m[3];
    };
    match kind {
        SubgroupKind::FullUnipotentRadical(s) => {
            for (i, j) in nilradical_basis(rs, *s) {
                out[(off + i, off + j)] = rng.random::<f64>();
            }
        }
        SubgroupKind::OneParamUnipotent(i, j) => {
            out[(off + i, off + j)] = rng.random::<f64>();
        }
        SubgroupKind::Trivial => {}
        SubgroupKind::EmbeddedSl2(k) => {
            let (i, _) = rs.root_coords(*k);
            let m = sample_sl2_block(rng, opts.y_cap);
            embed_sl2(out, i, m);
        }
        SubgroupKind::LeviSemisimpleNc(s) => {
            for (a, b) in rs.blocks(*s) {
                match b - a {
                    1 => {}
                    2 => {
                        let m = sample_sl2_block(rng, opts.y_cap);
                        embed_sl2(out, a, m);
                    }
                    k => {
                        return Err(Error::NotCovered(format!(
                            "no fundamental-domain sampler for an SL_{k} Levi block"
                        )))
                    }
                }
            }
        }
        SubgroupKind::Whole => {
            return Err(Error::NotCovered("the whole group has no sampler in the catalog".into()))
        }
        SubgroupKind::Product(list) => {
            for (f, k) in list.iter().enumerate() {
                let sub = RootSystem::type_a(rs.factors()[f])?;
                sample_kind(k, &sub, opts, rng, out, off + rs.factor_range(f).start)?;
            }
        }
    }
    Ok(())
}

/// Fresh RNG for sample block `block` of a run with seed `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Draws `count` points from the `Γ∩H` fundamental domain of `spec`.
pub fn sample_subgroup(
    spec: &SubgroupSpec,
    rs: &RootSystem,
    count: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<Vec<GroupElement>> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let sampler = Sampler::new(spec, rs, *opts)?;
    let blocks = count.div_ceil(BLOCK_SIZE);
    let per_block: Vec<Vec<GroupElement>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b as u64);
            let n = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
            (0..n).map(|_| sampler.draw(&mut rng)).collect()
        })
        .collect();
    Ok(per_block.into_iter().flatten().collect())
}

/// Prepared sampler for one subgroup spec.
#[derive(Clone, Debug)]
pub struct Sampler {
    kind: SubgroupKind,
    rs: RootSystem,
    conj: Option<(DMatrix<f64>, DMatrix<f64>)>,
    opts: SamplerOptions,
}

impl Sampler {
    pub fn new(spec: &SubgroupSpec, rs: &RootSystem, opts: SamplerOptions) -> Result<Self> {
        spec.validate(rs)?;
        // Probe once so unsupported kinds fail up front.
        let mut probe = DMatrix::identity(rs.dim(), rs.dim());
        sample_kind(&spec.kind, rs, &opts, &mut ChaCha8Rng::seed_from_u64(0), &mut probe, 0)?;
        let d = rs.dim();
        let conj = spec.conjugator.as_ref().map(|c| {
            let ci = int_inverse(c, d);
            (
                DMatrix::from_fn(d, d, |i, j| c[i * d + j] as f64),
                DMatrix::from_fn(d, d, |i, j| ci[i * d + j] as f64),
            )
        });
        Ok(Sampler { kind: spec.kind.clone(), rs: rs.clone(), conj, opts })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let d = self.rs.dim();
        let mut m = DMatrix::identity(d, d);
        sample_kind(&self.kind, &self.rs, &self.opts, rng, &mut m, 0).expect("validated in Sampler::new");
        if let Some((c, ci)) = &self.conj {
            m = c * m * ci;
        }
        GroupElement::from_raw(m, self.rs.factors())
    }

    /// Relative mass lost to the height cap (per `SL_2` block sampled).
    pub fn truncation_loss(&self) -> f64 {
        let blocks = sl2_blocks(&self.kind, &self.rs);
        if blocks == 0 { 0.0 } else { 1.0 - (1.0 - truncation_loss(self.opts.y_cap)).powi(blocks as i32) }
    }
}

fn sl2_blocks(kind: &SubgroupKind, rs: &RootSystem) -> usize {
    match kind {
        SubgroupKind::EmbeddedSl2(_) => 1,
        SubgroupKind::LeviSemisimpleNc(s) => rs.blocks(*s).iter().filter(|(a, b)| b - a == 2).count(),
        SubgroupKind::Product(list) => list
            .iter()
            .enumerate()
            .map(|(f, k)| RootSystem::type_a(rs.factors()[f]).map(|sub| sl2_blocks(k, &sub)).unwrap_or(0))
            .sum(),
        _ => 0,
    }
}

/// Right translation `h ↦ h g`.
pub fn pushforward(samples: &[GroupElement], g: &GroupElement) -> Vec<GroupElement> {
    samples.iter().map(|h| h.mul(g)).collect()
}

/// Reduced sample cloud with uniform weights.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    pub points: Vec<ReducedPoint>,
    pub seed: u64,
    pub sample_count: usize,
    pub truncation_loss: f64,
}

impl EmpiricalMeasure {
    pub fn from_samples(samples: &[GroupElement], seed: u64, truncation_loss: f64) -> Self {
        let points: Vec<ReducedPoint> = samples.par_iter().map(reduce).collect();
        EmpiricalMeasure { sample_count: points.len(), points, seed, truncation_loss }
    }

    /// Samples `spec`, translates by `g` and reduces, in parallel blocks with
    /// independent RNG streams.
    pub fn generate(
        spec: &SubgroupSpec,
        rs: &RootSystem,
        g: &GroupElement,
        count: usize,
        seed: u64,
        opts: &SamplerOptions,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        let sampler = Sampler::new(spec, rs, *opts)?;
        let blocks = count.div_ceil(BLOCK_SIZE);
        let per_block: Vec<Vec<ReducedPoint>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b as u64);
                let n = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
                (0..n).map(|_| reduce(&sampler.draw(&mut rng).mul(g))).collect()
            })
            .collect();
        let points: Vec<ReducedPoint> = per_block.into_iter().flatten().collect();
        Ok(EmpiricalMeasure { sample_count: points.len(), points, seed, truncation_loss: sampler.truncation_loss() })
    }

    pub fn root_values(&self, rs: &RootSystem) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| crate::lingrp::root_values(&p.iwasawa.a, rs).values).collect()
    }
}

/// Mass per component label `I(x) = {α : α(a(x)) ≤ T_esc}`; `Δ` is the
/// interior.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryHistogram {
    pub mass: BTreeMap<RootSet, f64>,
    pub t_esc: f64,
    pub total: usize,
}

impl BoundaryHistogram {
    pub fn get(&self, label: RootSet) -> f64 {
        self.mass.get(&label).copied().unwrap_or(0.0)
    }

    /// Label with the most mass (ties resolved toward the smaller label).
    pub fn argmax(&self) -> Option<(RootSet, f64)> {
        self.mass
            .iter()
            .fold(None, |best: Option<(RootSet, f64)>, (&k, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((k, v)),
            })
    }

    /// Binomial standard error of the mass at `label`.
    pub fn std_error(&self, label: RootSet) -> f64 {
        let p = self.get(label);
        (p * (1.0 - p) / self.total.max(1) as f64).sqrt()
    }
}

pub fn escape_label(a: &[f64], rs: &RootSystem, t_esc: f64) -> RootSet {
    let mut s = RootSet::EMPTY;
    for k in 0..rs.rank() {
        let (i, j) = rs.root_coords(k);
        if a[i] / a[j] <= t_esc {
            s = s.with(k);
        }
    }
    s
}

pub fn boundary_histogram(m: &EmpiricalMeasure, rs: &RootSystem, t_esc: f64) -> BoundaryHistogram {
    let mut counts: BTreeMap<RootSet, usize> = BTreeMap::new();
    for p in &m.points {
        *counts.entry(escape_label(&p.iwasawa.a, rs, t_esc)).or_default() += 1;
    }
    let total = m.points.len();
    let mass = counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect();
    BoundaryHistogram { mass, t_esc, total }
}

/// Axis-aligned bounds on the Iwasawa coordinates (unipotent entries in
/// row-major order, then `log a`).
#[derive(Clone, Debug, PartialEq)]
pub struct CoordBox {
    pub u: Vec<(f64, f64)>,
    pub log_a: Vec<(f64, f64)>,
}

impl CoordBox {
    pub fn everything(d: usize) -> Self {
        let inf = (f64::NEG_INFINITY, f64::INFINITY);
        CoordBox { u: vec![inf; d * (d - 1) / 2], log_a: vec![inf; d] }
    }

    pub fn empty(d: usize) -> Self {
        CoordBox { u: vec![(1.0, 0.0); d * (d - 1) / 2], log_a: vec![(1.0, 0.0); d] }
    }

    /// Unbounded unipotent part, `|log a_i| ≤ r`.
    pub fn log_a_ball(d: usize, r: f64) -> Self {
        let mut b = Self::everything(d);
        b.log_a = vec![(-r, r); d];
        b
    }

    pub fn contains(&self, p: &ReducedPoint) -> bool {
        let inside = |(lo, hi): (f64, f64), x: f64| lo <= x && x <= hi;
        p.iwasawa.u_coords().iter().zip(&self.u).all(|(&x, &b)| inside(b, x))
            && p.iwasawa.log_a().iter().zip(&self.log_a).all(|(&x, &b)| inside(b, x))
    }
}

pub fn window_mass(m: &EmpiricalMeasure, bx: &CoordBox) -> f64 {
    if m.points.is_empty() {
        return 0.0;
    }
    m.points.iter().filter(|p| bx.contains(p)).count() as f64 / m.points.len() as f64
}
