//! Self-check suites for the numeric kernel and the exact root-system
//! layer. Each suite returns a summary row; `verify-identities` prints them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lingrp::{iwasawa, langlands, random_element, verify_dalpha, ParabolicIndex};
use crate::rational::{Direction, Q};
use crate::rootsys::{RootSet, RootSystem};
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed error; 0 for exact suites that passed.
    pub max_error: f64,
    pub tolerance: f64,
    pub failures: usize,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.max_error <= self.tolerance
    }
}

pub const ROUNDTRIP_TOL: f64 = 1e-9;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const DALPHA_TOL: f64 = 1e-8;

/// Spread of `log a` for random test elements; keeps condition numbers far
/// below the rejection threshold.
const SPREAD: f64 = 2.0;

fn relative(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Iwasawa and Langlands round trips for every standard parabolic.
pub fn decomposition_roundtrip(trials: usize, seed: u64) -> [IdentityCheck; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rt = IdentityCheck { name: "iwasawa/langlands round trip", cases: 0, max_error: 0.0, tolerance: ROUNDTRIP_TOL, failures: 0 };
    let mut orth = IdentityCheck { name: "k orthogonality", cases: 0, max_error: 0.0, tolerance: ORTHOGONALITY_TOL, failures: 0 };
    for n in 2..=4 {
        let rs = RootSystem::type_a(n).expect("valid rank");
        for _ in 0..trials {
            let g = random_element(&rs, &mut rng, SPREAD);
            let Ok(iw) = iwasawa(&g) else {
                rt.failures += 1;
                continue;
            };
            rt.cases += 1;
            rt.max_error = rt.max_error.max(relative(&iw.reconstruct(), g.matrix()));
            orth.cases += 1;
            let kkt = &iw.k * iw.k.transpose();
            orth.max_error = orth.max_error.max((kkt - nalgebra::DMatrix::identity(n, n)).norm());
            for set in RootSet::all(rs.rank()) {
                let parts = langlands(&g, &rs, &ParabolicIndex::standard(set)).expect("checked above");
                rt.cases += 1;
                rt.max_error = rt.max_error.max(relative(&parts.reconstruct(), g.matrix()));
            }
        }
    }
    [rt, orth]
}

/// `d_P(g⁻¹)` against the product of root values over all maximal
/// parabolics.
pub fn dalpha_identity(trials: usize, seed: u64) -> IdentityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = IdentityCheck { name: "d_alpha root-product identity", cases: 0, max_error: 0.0, tolerance: DALPHA_TOL, failures: 0 };
    for n in 2..=4 {
        let rs = RootSystem::type_a(n).expect("valid rank");
        for _ in 0..trials {
            let g = random_element(&rs, &mut rng, SPREAD);
            for a in 0..rs.rank() {
                match verify_dalpha(&rs, &g, &ParabolicIndex::maximal(&rs, a)) {
                    Ok(e) => out.max_error = out.max_error.max(e),
                    Err(_) => out.failures += 1,
                }
                out.cases += 1;
            }
        }
    }
    out
}

/// Inverse Cartan matrices of `A_1 … A_8` have positive entries.
pub fn inverse_cartan_positive() -> IdentityCheck {
    let mut out = exact("inverse Cartan positivity");
    for n in 2..=9 {
        let rs = RootSystem::type_a(n).expect("valid rank");
        let inv = rs.cartan().inverse().expect("Cartan matrix is invertible");
        for i in 0..rs.rank() {
            for j in 0..rs.rank() {
                out.cases += 1;
                if !inv[(i, j)].is_positive() {
                    out.failures += 1;
                }
            }
        }
    }
    out
}

/// `span(I) ⊥ span{χ_β : β ∉ I}` and the dimensions add up.
pub fn decomposition_orthogonal() -> IdentityCheck {
    let mut out = exact("character decomposition orthogonality");
    for n in 2..=4 {
        let rs = RootSystem::type_a(n).expect("valid rank");
        let chi = rs.quasi_fundamental_weights();
        for set in RootSet::all(rs.rank()) {
            for a in set.iter() {
                for b in rs.delta().minus(set).iter() {
                    out.cases += 1;
                    if !rs.pair(&rs.simple(a), &chi[b]).is_zero() {
                        out.failures += 1;
                    }
                }
            }
            // The restriction of each χ_α (α ∈ I) stays quasi-fundamental.
            out.cases += 1;
            if rs.restrict_weights(set).is_err() {
                out.failures += 1;
            }
        }
    }
    out
}

/// `π₁(β)` for `β ∉ I` has non-positive coefficients on `I`.
pub fn restricted_roots_nonpositive() -> IdentityCheck {
    let mut out = exact("restricted roots non-positive");
    for n in 2..=4 {
        let rs = RootSystem::type_a(n).expect("valid rank");
        for set in RootSet::all(rs.rank()) {
            for b in rs.delta().minus(set).iter() {
                let p = rs.project(&rs.simple(b), set);
                for a in set.iter() {
                    out.cases += 1;
                    if p.coords[a].is_positive() {
                        out.failures += 1;
                    }
                }
            }
        }
    }
    out
}

/// Random rational direction with small integer entries, so walls are hit
/// often.
pub fn random_direction<R: Rng + ?Sized>(rs: &RootSystem, rng: &mut R) -> Direction {
    let mut v = vec![Q::zero(); rs.dim()];
    for f in 0..rs.factors().len() {
        let r = rs.factor_range(f);
        let xs: Vec<i128> = r.clone().map(|_| rng.random_range(-3..=3)).collect();
        let mean = Q::new(xs.iter().sum::<i128>(), xs.len() as i128);
        for (t, i) in r.enumerate() {
            v[i] = Q::from_integer(xs[t]) - mean;
        }
    }
    Direction(v)
}

/// Every direction lies in exactly one canonical cone, and it is the one
/// `locate_chamber` reports.
pub fn chamber_partition(trials: usize, seed: u64) -> IdentityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = exact("chamber partition");
    for n in [3, 4] {
        let rs = RootSystem::type_a(n).expect("valid rank");
        let faces = rs.all_faces();
        for _ in 0..trials {
            let v = random_direction(&rs, &mut rng);
            let hits: Vec<_> = faces.iter().filter(|f| rs.face_contains(f, &v)).collect();
            out.cases += 1;
            if hits.len() != 1 || *hits[0] != rs.canonicalize(&rs.locate_chamber(&v)) {
                out.failures += 1;
            }
        }
    }
    out
}

fn exact(name: &'static str) -> IdentityCheck {
    IdentityCheck { name, cases: 0, max_error: 0.0, tolerance: 0.0, failures: 0 }
}

/// All suites, in a fixed order.
pub fn run_all(trials: usize, seed: u64) -> Vec<IdentityCheck> {
    let mut out: Vec<IdentityCheck> = decomposition_roundtrip(trials, seed).into();
    out.push(dalpha_identity(trials, seed.wrapping_add(1)));
    out.push(inverse_cartan_positive());
    out.push(decomposition_orthogonal());
    out.push(restricted_roots_nonpositive());
    out.push(chamber_partition(trials, seed.wrapping_add(2)));
    out
}
