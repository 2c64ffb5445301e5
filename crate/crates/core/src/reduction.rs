//! Reduction of points of `Γ\G` into Siegel sets, `Γ = SL_n(ℤ)` (or a
//! product of `SL_2(ℤ)`), and bounded enumeration of `Γ`.
//!
//! `Γ` acts on the left, so reducing `g` means reducing the lattice spanned
//! by the rows of `g`. With `g = n a k` the Gram–Schmidt lengths taken from
//! the bottom row up are `a_{d-1}, …, a_0`, so a Lenstra–Lenstra–Lovász pass
//! over the rows in reverse order yields `α_i(a) = a_i/a_{i+1} ≥ √(δ − 1/4)`.

use std::collections::VecDeque;
use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::lingrp::{iwasawa_unchecked, GroupElement, LanglandsParts};

/// Lovász parameter of the first pass.
pub const LLL_DELTA: f64 = 0.99;
/// Lovász parameter of the polishing pass; close enough to 1 that the root
/// bound reaches `√3/2` within the Siegel slack.
pub const POLISH_DELTA: f64 = 1.0 - 1e-9;
const POLISH_CAP: usize = 10_000;
/// Constant in the swap-count monitor `C·(1 + ln cond)`.
pub const SWAP_CONSTANT: f64 = 40.0;

/// Siegel set in the lower-bound convention: `α(a) ≥ 1/t − slack` and
/// `|n_ij| ≤ u_bound + 1e-9`. The equivalent upper-bound form `α(a') ≤ t` is
/// checked on `g⁻¹ = k' a' ω'` by [`in_siegel_inverse_form`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiegelSet {
    pub t: f64,
    pub u_bound: f64,
    pub slack: f64,
}

impl Default for SiegelSet {
    fn default() -> Self {
        SiegelSet { t: 2.0 / 3f64.sqrt(), u_bound: 0.5, slack: 1e-6 }
    }
}

impl SiegelSet {
    pub fn root_lower_bound(&self) -> f64 {
        1.0 / self.t
    }
}

/// Output of a reduction: `rep = gamma · original`.
#[derive(Clone, Debug)]
pub struct ReducedPoint {
    /// Row-major integer matrix in `SL_d(ℤ)` (block diagonal for products).
    pub gamma: Vec<i64>,
    pub rep: GroupElement,
    pub iwasawa: LanglandsParts,
    /// Number of exchange steps performed (inversions for `SL_2`).
    pub swaps: usize,
}

impl ReducedPoint {
    pub fn gamma_matrix(&self) -> DMatrix<f64> {
        let d = self.rep.dim();
        DMatrix::from_fn(d, d, |i, j| self.gamma[i * d + j] as f64)
    }

    pub fn gamma_is_identity(&self) -> bool {
        let d = self.rep.dim();
        (0..d).all(|i| (0..d).all(|j| self.gamma[i * d + j] == (i == j) as i64))
    }
}

/// Reduces `g` block by block: exact Gauss reduction for `SL_2` blocks,
/// LLL for larger ones.
pub fn reduce(g: &GroupElement) -> ReducedPoint {
    let d = g.dim();
    let mut gamma = vec![0i64; d * d];
    let mut swaps = 0;
    let mut off = 0;
    for &b in g.layout() {
        let block = g.matrix().view((off, off), (b, b)).clone_owned();
        let (gb, s) = if b == 2 { gauss_block(&block) } else { lll_block(&block) };
        swaps += s;
        for i in 0..b {
            for j in 0..b {
                gamma[(off + i) * d + off + j] = gb[i * b + j];
            }
        }
        off += b;
    }
    finish(g, gamma, swaps)
}

/// Gauss reduction of `z = g·i` into the standard fundamental domain
/// `|Re z| ≤ 1/2`, `|z| ≥ 1`.
pub fn reduce_sl2(g: &GroupElement) -> ReducedPoint {
    assert_eq!(g.layout(), [2], "reduce_sl2 expects SL_2");
    reduce(g)
}

/// Siegel reduction for `SL_3` and `SL_4` (works for any single block).
pub fn reduce_siegel(g: &GroupElement) -> ReducedPoint {
    assert_eq!(g.layout().len(), 1, "reduce_siegel expects a single SL_n block");
    reduce(g)
}

fn finish(g: &GroupElement, gamma: Vec<i64>, swaps: usize) -> ReducedPoint {
    let d = g.dim();
    let gm = DMatrix::from_fn(d, d, |i, j| gamma[i * d + j] as f64);
    let rep = GroupElement::from_raw(gm * g.matrix(), g.layout());
    let iwasawa = iwasawa_unchecked(rep.matrix());
    ReducedPoint { gamma, rep, iwasawa, swaps }
}

fn moebius(g: &DMatrix<f64>, x: f64, y: f64) -> (f64, f64) {
    // (a z + b)/(c z + d) with z = x + iy
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let (nr, ni) = (a * x + b, a * y);
    let (dr, di) = (c * x + d, c * y);
    let den = dr * dr + di * di;
    ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
}

fn gauss_block(g: &DMatrix<f64>) -> (Vec<i64>, usize) {
    let (mut x, mut y) = moebius(g, 0.0, 1.0);
    let mut gm = [1i64, 0, 0, 1];
    let mut swaps = 0;
    loop {
        let k = x.round();
        if k != 0.0 {
            x -= k;
            let k = k as i64;
            // T^{-k} γ
            gm = [gm[0] - k * gm[2], gm[1] - k * gm[3], gm[2], gm[3]];
        }
        let r2 = x * x + y * y;
        if r2 < 1.0 - 1e-12 {
            x = -x / r2;
            y /= r2;
            // S γ with S = [[0,-1],[1,0]]
            gm = [-gm[2], -gm[3], gm[0], gm[1]];
            swaps += 1;
        } else {
            break;
        }
        if swaps > 100_000 {
            break;
        }
    }
    (gm.to_vec(), swaps)
}

/// Gram–Schmidt data for rows `b[0..n]` (top-down order).
fn gram_schmidt(b: &[[f64; 8]], n: usize) -> ([[f64; 8]; 8], [f64; 8]) {
    let mut mu = [[0.0; 8]; 8];
    let mut bstar = [[0.0; 8]; 8];
    let mut norms = [0.0; 8];
    for i in 0..n {
        bstar[i] = b[i];
        for j in 0..i {
            let m = dot(&b[i], &bstar[j], n) / norms[j];
            mu[i][j] = m;
            for c in 0..n {
                bstar[i][c] -= m * bstar[j][c];
            }
        }
        norms[i] = dot(&bstar[i], &bstar[i], n);
    }
    (mu, norms)
}

fn dot(a: &[f64; 8], b: &[f64; 8], n: usize) -> f64 {
    (0..n).map(|i| a[i] * b[i]).sum()
}

fn lll_block(g: &DMatrix<f64>) -> (Vec<i64>, usize) {
    let n = g.nrows();
    assert!(n <= 8);
    // Basis c_j = row n-1-j of g, unimodular transform u with c' = u c.
    let mut b = [[0.0; 8]; 8];
    let mut u = [[0i64; 8]; 8];
    for j in 0..n {
        for c in 0..n {
            b[j][c] = g[(n - 1 - j, c)];
        }
        u[j][j] = 1;
    }
    let mut swaps = lll_pass(&mut b, &mut u, n, LLL_DELTA, usize::MAX);
    swaps += lll_pass(&mut b, &mut u, n, POLISH_DELTA, POLISH_CAP);
    // gamma = J u J with J the reversal.
    let mut gamma = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            gamma[i * n + j] = u[n - 1 - i][n - 1 - j];
        }
    }
    if det_i64(&gamma, n) < 0 {
        // Negating the top row leaves every Gram–Schmidt length unchanged.
        for j in 0..n {
            gamma[j] = -gamma[j];
        }
    }
    (gamma, swaps)
}

fn size_reduce(b: &mut [[f64; 8]; 8], u: &mut [[i64; 8]; 8], n: usize, k: usize) {
    for j in (0..k).rev() {
        let (mu, _) = gram_schmidt(b, n);
        let r = mu[k][j].round();
        if r != 0.0 {
            let ri = r as i64;
            for c in 0..n {
                b[k][c] -= r * b[j][c];
                u[k][c] -= ri * u[j][c];
            }
        }
    }
}

fn lll_pass(b: &mut [[f64; 8]; 8], u: &mut [[i64; 8]; 8], n: usize, delta: f64, cap: usize) -> usize {
    let mut swaps = 0;
    let mut k = 1;
    while k < n {
        size_reduce(b, u, n, k);
        let (mu, norms) = gram_schmidt(b, n);
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            swaps += 1;
            if swaps >= cap {
                break;
            }
            k = (k - 1).max(1);
        }
    }
    for k in 1..n {
        size_reduce(b, u, n, k);
    }
    swaps
}

fn det_i64(m: &[i64], n: usize) -> i64 {
    match n {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<i64> = (1..n)
                    .flat_map(|i| (0..n).filter(move |&c| c != j).map(move |c| (i, c)))
                    .map(|(i, c)| m[i * n + c])
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[j] * det_i64(&minor, n - 1)
            })
            .sum(),
    }
}

/// Determinant of a row-major integer matrix.
pub fn integer_det(m: &[i64], n: usize) -> i64 {
    det_i64(m, n)
}

/// Monitored upper bound on the number of exchange steps.
pub fn swap_bound(cond: f64, n: usize) -> f64 {
    SWAP_CONSTANT * (n * n) as f64 * (1.0 + cond.max(1.0).ln())
}

/// Membership in the Siegel set via the Iwasawa coordinates of `g`.
pub fn in_siegel(g: &GroupElement, s: &SiegelSet) -> bool {
    in_siegel_parts(&iwasawa_unchecked(g.matrix()), g.layout(), s)
}

pub fn in_siegel_parts(p: &LanglandsParts, layout: &[usize], s: &SiegelSet) -> bool {
    let lo = s.root_lower_bound() - s.slack;
    let mut off = 0;
    for &b in layout {
        for i in off..off + b {
            if i + 1 < off + b && p.a[i] / p.a[i + 1] < lo {
                return false;
            }
            for j in i + 1..off + b {
                if p.n[(i, j)].abs() > s.u_bound + 1e-9 {
                    return false;
                }
            }
        }
        off += b;
    }
    true
}

/// The upper-bound form: write `g⁻¹ = k' a' ω'` with `ω'` upper unipotent
/// and test `α(a') ≤ t + slack`.
pub fn in_siegel_inverse_form(g: &GroupElement, s: &SiegelSet) -> bool {
    let inv = g.inverse();
    let qr = inv.matrix().clone().qr();
    let r = qr.r();
    let d = g.dim();
    let a: Vec<f64> = (0..d).map(|i| r[(i, i)].abs()).collect();
    let mut off = 0;
    for &b in g.layout() {
        for i in off..off + b - 1 {
            if a[i] / a[i + 1] > s.t + s.slack * s.t * s.t {
                return false;
            }
        }
        off += b;
    }
    true
}

/// Streams every `γ ∈ SL_n(ℤ)` with `max |γ_ij| ≤ height` exactly once. The
/// last row is solved from the cofactors of the others; a visit budget
/// bounds the work and [`GammaEnumerator::truncated`] reports whether it was
/// hit.
pub struct GammaEnumerator {
    n: usize,
    h: i64,
    top: Vec<i64>,
    started: bool,
    done: bool,
    pending: VecDeque<Vec<i64>>,
    visits: u64,
    budget: u64,
    truncated: bool,
}

pub const DEFAULT_VISIT_BUDGET: u64 = 50_000_000;

pub fn enumerate_gamma(n: usize, height: i64) -> GammaEnumerator {
    GammaEnumerator::with_budget(n, height, DEFAULT_VISIT_BUDGET)
}

impl GammaEnumerator {
    pub fn with_budget(n: usize, height: i64, budget: u64) -> Self {
        assert!(n >= 1);
        GammaEnumerator {
            n,
            h: height.max(0),
            top: vec![-height.max(0); n * (n - 1)],
            started: false,
            done: height < 1 && n > 1,
            pending: VecDeque::new(),
            visits: 0,
            budget,
            truncated: false,
        }
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    fn advance_top(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return true;
        }
        for x in self.top.iter_mut().rev() {
            if *x < self.h {
                *x += 1;
                return true;
            }
            *x = -self.h;
        }
        false
    }

    fn solve_last_row(&mut self) {
        let n = self.n;
        // det = Σ_j cof_j x_j along the last row.
        let cof: Vec<i64> = (0..n)
            .map(|j| {
                let minor: Vec<i64> = (0..n - 1)
                    .flat_map(|i| (0..n).filter(move |&c| c != j).map(move |c| (i, c)))
                    .map(|(i, c)| self.top[i * n + c])
                    .collect();
                let s = if (n - 1 + j) % 2 == 0 { 1 } else { -1 };
                s * if n == 1 { 1 } else { det_i64(&minor, n - 1) }
            })
            .collect();
        let Some(s) = (0..n).rev().find(|&j| cof[j] != 0) else {
            return;
        };
        let free: Vec<usize> = (0..n).filter(|&j| j != s).collect();
        let mut x = vec![-self.h; free.len()];
        loop {
            self.visits += 1;
            let partial: i64 = free.iter().zip(&x).map(|(&j, &v)| cof[j] * v).sum();
            let rem = 1 - partial;
            if rem % cof[s] == 0 {
                let xs = rem / cof[s];
                if xs.abs() <= self.h {
                    let mut m = self.top.clone();
                    let mut last = vec![0; n];
                    for (&j, &v) in free.iter().zip(&x) {
                        last[j] = v;
                    }
                    last[s] = xs;
                    m.extend(last);
                    self.pending.push_back(m);
                }
            }
            let mut carry = true;
            for v in x.iter_mut().rev() {
                if *v < self.h {
                    *v += 1;
                    carry = false;
                    break;
                }
                *v = -self.h;
            }
            if carry {
                break;
            }
        }
    }
}

impl Iterator for GammaEnumerator {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        loop {
            if let Some(m) = self.pending.pop_front() {
                return Some(m);
            }
            if self.done {
                return None;
            }
            if self.visits >= self.budget {
                self.truncated = true;
                self.done = true;
                return None;
            }
            if !self.advance_top() {
                self.done = true;
                return None;
            }
            self.solve_last_row();
        }
    }
}

/// Writes reduced points as whitespace-separated columns: index, gamma
/// entries, unipotent coordinates, log of the `a`-part.
pub fn write_columnar<W: Write>(out: &mut W, points: &[ReducedPoint]) -> io::Result<()> {
    let Some(first) = points.first() else {
        return writeln!(out, "# empty");
    };
    let d = first.rep.dim();
    let mut head = vec!["idx".to_string()];
    for i in 0..d {
        for j in 0..d {
            head.push(format!("gamma{}{}", i + 1, j + 1));
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            head.push(format!("u{}{}", i + 1, j + 1));
        }
    }
    for i in 0..d {
        head.push(format!("loga{}", i + 1));
    }
    writeln!(out, "{}", head.join(" "))?;
    for (idx, p) in points.iter().enumerate() {
        let mut row = vec![idx.to_string()];
        row.extend(p.gamma.iter().map(|x| x.to_string()));
        row.extend(p.iwasawa.u_coords().iter().map(|x| format!("{x:.12e}")));
        row.extend(p.iwasawa.log_a().iter().map(|x| format!("{x:.12e}")));
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl2(a: f64, b: f64, c: f64, d: f64) -> GroupElement {
        GroupElement::ingest(DMatrix::from_row_slice(2, 2, &[a, b, c, d]), &[2]).unwrap()
    }

    fn z_of(p: &ReducedPoint) -> (f64, f64) {
        moebius(p.rep.matrix(), 0.0, 1.0)
    }

    #[test]
    fn sl2_examples() {
        let p = reduce_sl2(&GroupElement::identity(&[2]));
        assert!(p.gamma_is_identity());
        // z = i + 5
        let p = reduce_sl2(&sl2(1.0, 5.0, 0.0, 1.0));
        assert_eq!(p.gamma, vec![1, -5, 0, 1]);
        let (x, y) = z_of(&p);
        assert!(x.abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
        // z = 0.1 i
        let s = 0.1f64.sqrt();
        let p = reduce_sl2(&sl2(s, 0.0, 0.0, 1.0 / s));
        let (x, y) = z_of(&p);
        assert!(x.abs() < 1e-12 && (y - 10.0).abs() < 1e-9);
        assert!(p.swaps >= 1);
    }

    #[test]
    fn siegel_identity_and_integer() {
        let p = reduce_siegel(&GroupElement::identity(&[3]));
        assert!(p.gamma_is_identity());
        let g = GroupElement::from_integer(&[vec![1, 2, 3], vec![0, 1, 4], vec![5, 6, 0]], &[3]).unwrap();
        let p = reduce_siegel(&g);
        assert!(p.iwasawa.a.iter().all(|a| (a - 1.0).abs() < 1e-9));
        assert_eq!(integer_det(&p.gamma, 3), 1);
    }

    #[test]
    fn siegel_membership() {
        let s = SiegelSet::default();
        assert!(in_siegel(&GroupElement::identity(&[3]), &s));
        let y: f64 = 0.01;
        assert!(!in_siegel(&sl2(y.sqrt(), 0.0, 0.0, 1.0 / y.sqrt()), &s));
        let g = GroupElement::ingest(
            DMatrix::from_row_slice(3, 3, &[1e3, 7.3, -2.1, 0.0, 1.0, 55.0, 0.0, 0.0, 1e-3]),
            &[3],
        )
        .unwrap();
        let p = reduce_siegel(&g);
        assert!(in_siegel(&p.rep, &s));
        assert!(in_siegel_inverse_form(&p.rep, &s));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_gamma(2, 0).count(), 0);
        let brute = {
            let mut c = 0;
            for a in -1..=1i64 {
                for b in -1..=1 {
                    for cc in -1..=1 {
                        for d in -1..=1 {
                            if a * d - b * cc == 1 {
                                c += 1;
                            }
                        }
                    }
                }
            }
            c
        };
        let all: Vec<_> = enumerate_gamma(2, 1).collect();
        assert_eq!(all.len(), brute);
        assert!(all.iter().all(|m| integer_det(m, 2) == 1));
        let mut e = GammaEnumerator::with_budget(3, 2, 100_000);
        let n = e.by_ref().count();
        assert!(e.truncated() && n > 0);
    }

    #[test]
    fn columnar_header() {
        let p = reduce(&GroupElement::identity(&[2]));
        let mut buf = Vec::new();
        write_columnar(&mut buf, &[p]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("idx gamma11 gamma12 gamma21 gamma22 u12 loga1 loga2\n"));
    }
}
