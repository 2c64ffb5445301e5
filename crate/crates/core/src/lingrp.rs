//! Numeric kernel for `SL_n(ℝ)` and block-diagonal products: Iwasawa and
//! Langlands decompositions, root values, and the `d_P` functions.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::parse_q;
use crate::rational::to_f64;
use crate::rootsys::{RootSet, RootSystem, WeylElement};

/// Inputs with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;
pub const DET_TOLERANCE: f64 = 1e-9;

/// An element of `SL_{n_1}(ℝ) × … × SL_{n_r}(ℝ)` stored as one block-diagonal
/// matrix. `layout` lists the block sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    mat: DMatrix<f64>,
    layout: Vec<usize>,
}

impl GroupElement {
    pub fn identity(layout: &[usize]) -> Self {
        let n = layout.iter().sum();
        GroupElement { mat: DMatrix::identity(n, n), layout: layout.to_vec() }
    }

    /// Accepts a matrix whose blocks have determinant within
    /// [`DET_TOLERANCE`] of 1, then rescales each block to determinant 1.
    pub fn new(mat: DMatrix<f64>, layout: &[usize]) -> Result<Self> {
        Self::build(mat, layout, true)
    }

    /// Accepts any matrix with positive block determinants and rescales each
    /// block by `det^{-1/n}`.
    pub fn ingest(mat: DMatrix<f64>, layout: &[usize]) -> Result<Self> {
        Self::build(mat, layout, false)
    }

    /// Wraps a matrix assumed to be in the group already (internal products).
    pub(crate) fn from_raw(mat: DMatrix<f64>, layout: &[usize]) -> Self {
        GroupElement { mat, layout: layout.to_vec() }
    }

    fn build(mut mat: DMatrix<f64>, layout: &[usize], strict: bool) -> Result<Self> {
        let n: usize = layout.iter().sum();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, layout needs {n}x{n}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let block_of: Vec<usize> =
            layout.iter().enumerate().flat_map(|(f, &b)| std::iter::repeat_n(f, b)).collect();
        for i in 0..n {
            for j in 0..n {
                if block_of[i] != block_of[j] && mat[(i, j)] != 0.0 {
                    return Err(Error::InvalidInput("matrix is not block diagonal".into()));
                }
            }
        }
        let mut off = 0;
        for &b in layout {
            let det = mat.view((off, off), (b, b)).determinant();
            if strict && (det - 1.0).abs() > DET_TOLERANCE {
                return Err(Error::InvalidInput(format!("block determinant {det} is not 1")));
            }
            if det <= 0.0 {
                return Err(Error::InvalidInput(format!("block determinant {det} is not positive")));
            }
            let s = det.powf(-1.0 / b as f64);
            mat.view_mut((off, off), (b, b)).scale_mut(s);
            off += b;
        }
        Ok(GroupElement { mat, layout: layout.to_vec() })
    }

    /// Parses whitespace/comma separated rows; entries may be decimals or
    /// exact `p/q` rationals. Rescaled to determinant 1 on load.
    pub fn parse(text: &str, layout: &[usize]) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split([',', ' ', '\t'])
                .filter(|t| !t.is_empty())
                .map(|t| parse_entry(t).map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse("matrix text is not square".into()));
        }
        Self::ingest(DMatrix::from_fn(n, n, |i, j| rows[i][j]), layout)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement { mat: &self.mat * &other.mat, layout: self.layout.clone() }
    }

    pub fn inverse(&self) -> GroupElement {
        let inv = self.mat.clone().try_inverse().expect("group elements are invertible");
        GroupElement { mat: inv, layout: self.layout.clone() }
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.mat.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 { f64::INFINITY } else { max / min }
    }

    pub fn check_condition(&self) -> Result<()> {
        let c = self.condition_number();
        if !(c <= MAX_CONDITION) {
            return Err(Error::Numerical(format!("condition number {c:.3e} exceeds {MAX_CONDITION:e}")));
        }
        Ok(())
    }

    /// Integer matrix as a group element.
    pub fn from_integer(rows: &[Vec<i64>], layout: &[usize]) -> Result<Self> {
        let n = rows.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j] as f64), layout)
    }

    /// Diagonal element `exp(diag(v))`.
    pub fn exp_diag(v: &[f64], layout: &[usize]) -> Self {
        let d: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        GroupElement { mat: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)), layout: layout.to_vec() }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.mat.nrows() {
            let row: Vec<String> = self.mat.row(i).iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

fn parse_entry(t: &str) -> Result<f64> {
    if t.contains('/') {
        return parse_q(t).map(|x| to_f64(&x));
    }
    t.parse::<f64>().map_err(|_| Error::Parse(format!("bad matrix entry {t:?}")))
}

/// A standard parabolic `P_I`, optionally conjugated as `γ P_I γ⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicIndex {
    pub set: RootSet,
    pub conjugator: Option<GroupElement>,
}

impl ParabolicIndex {
    pub fn standard(set: RootSet) -> Self {
        ParabolicIndex { set, conjugator: None }
    }

    /// `P_α`: the maximal parabolic `P_{Δ∖{α}}`.
    pub fn maximal(rs: &RootSystem, alpha: usize) -> Self {
        Self::standard(rs.delta().without(alpha))
    }

    pub fn flag_shape(&self, rs: &RootSystem) -> Vec<usize> {
        rs.flag_shape(self.set)
    }

    pub fn is_whole(&self, rs: &RootSystem) -> bool {
        self.set == rs.delta()
    }
}

/// `g = n·m·a·k`.
#[derive(Clone, Debug)]
pub struct LanglandsParts {
    pub n: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Diagonal of the `A`-component.
    pub a: Vec<f64>,
    pub k: DMatrix<f64>,
}

impl LanglandsParts {
    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.a.clone()))
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.n * &self.m * self.a_matrix() * &self.k
    }

    /// Unipotent coordinates `n_ij`, `i < j`, row-major.
    pub fn u_coords(&self) -> Vec<f64> {
        let d = self.n.nrows();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                out.push(self.n[(i, j)]);
            }
        }
        out
    }

    pub fn log_a(&self) -> Vec<f64> {
        self.a.iter().map(|x| x.ln()).collect()
    }
}

/// Iwasawa decomposition `g = n a k` with `n` upper unitriangular, `a`
/// positive diagonal and `k ∈ SO(n)`, by Gram–Schmidt on the rows from the
/// bottom up.
pub fn iwasawa(g: &GroupElement) -> Result<LanglandsParts> {
    g.check_condition()?;
    Ok(iwasawa_unchecked(g.matrix()))
}

pub(crate) fn iwasawa_unchecked(g: &DMatrix<f64>) -> LanglandsParts {
    let d = g.nrows();
    let mut k = DMatrix::<f64>::zeros(d, d);
    let mut r = DMatrix::<f64>::zeros(d, d);
    for i in (0..d).rev() {
        let mut row = g.row(i).clone_owned();
        // Two passes of modified Gram-Schmidt for stability.
        for _ in 0..2 {
            for j in i + 1..d {
                let c = row.dot(&k.row(j));
                r[(i, j)] += c;
                row -= k.row(j) * c;
            }
        }
        let norm = row.norm();
        r[(i, i)] = norm;
        k.set_row(i, &(row / norm));
    }
    let a: Vec<f64> = (0..d).map(|i| r[(i, i)]).collect();
    let n = DMatrix::from_fn(d, d, |i, j| if j >= i { r[(i, j)] / a[j] } else { 0.0 });
    LanglandsParts { n, m: DMatrix::identity(d, d), a, k }
}

/// Langlands decomposition relative to the standard parabolic `P_I`.
/// `a` is constant on the blocks of the flag (geometric mean of the Iwasawa
/// diagonal), `m` is block diagonal with block determinants 1.
pub fn langlands(g: &GroupElement, rs: &RootSystem, p: &ParabolicIndex) -> Result<LanglandsParts> {
    check_layout(g, rs)?;
    let iw = iwasawa(g)?;
    Ok(split_levi(&iw, rs, p.set))
}

pub(crate) fn split_levi(iw: &LanglandsParts, rs: &RootSystem, set: RootSet) -> LanglandsParts {
    let d = iw.a.len();
    let blocks = rs.blocks(set);
    let mut a = vec![0.0; d];
    let mut n_m = DMatrix::<f64>::identity(d, d);
    for &(s, e) in &blocks {
        let mean = (iw.a[s..e].iter().map(|x| x.ln()).sum::<f64>() / (e - s) as f64).exp();
        for i in s..e {
            a[i] = mean;
            for j in i + 1..e {
                n_m[(i, j)] = iw.n[(i, j)];
            }
        }
    }
    let n_m_inv = n_m.clone().try_inverse().expect("unitriangular");
    let n = &iw.n * n_m_inv;
    let ratio = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| iw.a[i] / a[i]));
    let m = n_m * ratio;
    LanglandsParts { n, m, a, k: iw.k.clone() }
}

fn check_layout(g: &GroupElement, rs: &RootSystem) -> Result<()> {
    if g.layout() != rs.factors() {
        return Err(Error::InvalidInput(format!(
            "element layout {:?} does not match root system {:?}",
            g.layout(),
            rs.factors()
        )));
    }
    Ok(())
}

/// `α(a)` for each simple root.
#[derive(Clone, Debug, PartialEq)]
pub struct RootValueVector {
    pub values: Vec<f64>,
}

pub fn root_values(a: &[f64], rs: &RootSystem) -> RootValueVector {
    RootValueVector {
        values: (0..rs.rank())
            .map(|k| {
                let (i, j) = rs.root_coords(k);
                a[i] / a[j]
            })
            .collect(),
    }
}

/// Roots of `A_P` on `𝔫_P` as (value, multiplicity): one per ordered pair of
/// flag blocks in the same factor.
pub fn parabolic_root_values(a: &[f64], rs: &RootSystem, set: RootSet) -> Vec<(f64, usize)> {
    let blocks = rs.blocks(set);
    let mut out = Vec::new();
    for (p, &(s1, e1)) in blocks.iter().enumerate() {
        for &(s2, e2) in &blocks[p + 1..] {
            if same_factor(rs, s1, s2) {
                out.push((a[s1] / a[s2], (e1 - s1) * (e2 - s2)));
            }
        }
    }
    out
}

fn same_factor(rs: &RootSystem, i: usize, j: usize) -> bool {
    (0..rs.factors().len()).any(|f| {
        let r = rs.factor_range(f);
        r.contains(&i) && r.contains(&j)
    })
}

/// Index pairs `(i, j)` spanning `𝔫_{P_I}`.
pub fn nilradical_basis(rs: &RootSystem, set: RootSet) -> Vec<(usize, usize)> {
    let blocks = rs.blocks(set);
    let mut out = Vec::new();
    for (p, &(s1, e1)) in blocks.iter().enumerate() {
        for &(s2, e2) in &blocks[p + 1..] {
            if !same_factor(rs, s1, s2) {
                continue;
            }
            for i in s1..e1 {
                for j in s2..e2 {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

/// `‖∧Ad(g) v_P‖` for the unit wedge `v_P` of `𝔫_P`, norm induced by the
/// Frobenius inner product.
fn wedge_norm(g: &DMatrix<f64>, ginv: &DMatrix<f64>, basis: &[(usize, usize)]) -> f64 {
    if basis.is_empty() {
        return 1.0;
    }
    let d = g.nrows();
    let cols: Vec<nalgebra::DVector<f64>> = basis
        .iter()
        .map(|&(i, j)| {
            // g E_ij g⁻¹ = (column i of g)(row j of g⁻¹)
            let outer = g.column(i) * ginv.row(j);
            nalgebra::DVector::from_iterator(d * d, outer.iter().copied())
        })
        .collect();
    let m = DMatrix::from_columns(&cols);
    let gram = m.transpose() * &m;
    gram.determinant().max(0.0).sqrt()
}

/// `d_P(g)`; for a conjugated parabolic `γPγ⁻¹` the wedge `Ad(γ)v_P` is
/// renormalized to unit length, which gives `d_P(gγ)/d_P(γ)`.
pub fn d_function(rs: &RootSystem, p: &ParabolicIndex, g: &GroupElement) -> f64 {
    let basis = nilradical_basis(rs, p.set);
    match &p.conjugator {
        None => wedge_norm(g.matrix(), &g.inverse().mat, &basis),
        Some(c) => {
            let gc = g.mul(c);
            wedge_norm(gc.matrix(), &gc.inverse().mat, &basis)
                / wedge_norm(c.matrix(), &c.inverse().mat, &basis)
        }
    }
}

/// Relative gap between `d_P(g⁻¹)` and `∏ α(a_P(g))^{−n_α}`.
pub fn verify_dalpha(rs: &RootSystem, g: &GroupElement, p: &ParabolicIndex) -> Result<f64> {
    let parts = langlands(g, rs, &ParabolicIndex::standard(p.set))?;
    let lhs = d_function(rs, &ParabolicIndex::standard(p.set), &g.inverse());
    let log_rhs: f64 = parabolic_root_values(&parts.a, rs, p.set)
        .iter()
        .map(|&(v, mult)| -(mult as f64) * v.ln())
        .sum();
    Ok((lhs - log_rhs.exp()).abs() / lhs)
}

/// Signed permutation matrix in `SO(n)` (per block) with `R e_i = ± e_{w(i)}`.
pub fn weyl_representative(w: &WeylElement, rs: &RootSystem) -> GroupElement {
    let d = rs.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (i, &p) in w.perm.iter().enumerate() {
        m[(p, i)] = 1.0;
    }
    for f in 0..rs.factors().len() {
        let r = rs.factor_range(f);
        let block = m.view((r.start, r.start), (r.len(), r.len())).determinant();
        if block < 0.0 {
            let col = r.clone().rev().find(|&i| w.perm[i] != i).expect("odd permutation moves a point");
            m.column_mut(col).neg_mut();
        }
    }
    GroupElement::from_raw(m, rs.factors())
}

/// Random element `k·a·u` with `log a` uniform in `[-spread, spread]` and
/// unipotent entries uniform in `[-1, 1]`; used by tests and benchmarks.
pub fn random_element<R: Rng + ?Sized>(rs: &RootSystem, rng: &mut R, spread: f64) -> GroupElement {
    let d = rs.dim();
    let mut mat = DMatrix::<f64>::zeros(d, d);
    for f in 0..rs.factors().len() {
        let r = rs.factor_range(f);
        let b = r.len();
        let x = DMatrix::from_fn(b, b, |_, _| rng.random_range(-1.0..1.0));
        let mut k = x.qr().q();
        if k.determinant() < 0.0 {
            k.column_mut(0).neg_mut();
        }
        let mut logs: Vec<f64> = (0..b).map(|_| rng.random_range(-spread..=spread)).collect();
        let mean = logs.iter().sum::<f64>() / b as f64;
        logs.iter_mut().for_each(|l| *l -= mean);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(b, logs.iter().map(|l| l.exp())));
        let u = DMatrix::from_fn(b, b, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => rng.random_range(-1.0..1.0),
            std::cmp::Ordering::Greater => 0.0,
        });
        mat.view_mut((r.start, r.start), (b, b)).copy_from(&(k * a * u));
    }
    GroupElement::ingest(mat, rs.factors()).expect("random element is invertible")
}

/// Random element of `SO(n)` per block.
pub fn random_orthogonal<R: Rng + ?Sized>(rs: &RootSystem, rng: &mut R) -> GroupElement {
    let g = random_element(rs, rng, 0.0);
    GroupElement::from_raw(iwasawa_unchecked(g.matrix()).k, rs.factors())
}
