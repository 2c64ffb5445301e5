use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satake_core::limits::{
    delta_truncated, ma_split, sl3_classify, unip_limit_i, unip_predicate, BoundedPart, ConjugatorPolicy,
};
use satake_core::lingrp::{d_function, iwasawa, langlands, nilradical_basis, random_element, random_orthogonal};
use satake_core::measures::{boundary_histogram, EmpiricalMeasure, SamplerOptions};
use satake_core::rational::Q;
use satake_core::reduction::{in_siegel, in_siegel_inverse_form, reduce, swap_bound};
use satake_core::{
    ChamberFace, Direction, GroupElement, ParabolicIndex, RootSet, RootSystem, SequenceSpec, SiegelSet, SubgroupKind,
    SubgroupSpec, WeylElement,
};

fn rs(n: usize) -> RootSystem {
    RootSystem::type_a(n).unwrap()
}

fn elem(n: usize, seed: u64, spread: f64) -> GroupElement {
    random_element(&rs(n), &mut ChaCha8Rng::seed_from_u64(seed), spread)
}

fn centered(xs: &[i32]) -> Direction {
    let n = xs.len() as i128;
    let sum: i128 = xs.iter().map(|&x| x as i128).sum();
    Direction(xs.iter().map(|&x| Q::new(x as i128 * n - sum, n)).collect())
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
}

/// Random element of `SL_n(ℤ)` as a product of elementary matrices.
fn random_gamma(n: usize, moves: &[(usize, usize, i64)]) -> Vec<i64> {
    let mut m = vec![0i64; n * n];
    for i in 0..n {
        m[i * n + i] = 1;
    }
    for &(i, j, c) in moves {
        let (i, j) = (i % n, j % n);
        if i == j {
            continue;
        }
        for k in 0..n {
            m[i * n + k] += c * m[j * n + k];
        }
    }
    m
}

/// Shrunken Siegel set, away from the overlaps of its `Γ`-translates.
const DEEP: SiegelSet = SiegelSet { t: 0.4, u_bound: 0.4, slack: 0.0 };

fn deep_inside(r: &satake_core::reduction::ReducedPoint) -> bool {
    satake_core::reduction::in_siegel_parts(&r.iwasawa, r.rep.layout(), &DEEP)
}

/// `u·a·k` with `|u_ij| ≤ 0.3` and every simple root value of `a` in `[3, 6]`.
fn deep_element(n: usize, seed: u64) -> GroupElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_a = vec![0.0; n];
    for i in 1..n {
        log_a[i] = log_a[i - 1] - rng.random_range(3f64.ln()..6f64.ln());
    }
    let mean = log_a.iter().sum::<f64>() / n as f64;
    let a: Vec<f64> = log_a.iter().map(|x| (x - mean).exp()).collect();
    let u = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => rng.random_range(-0.3..0.3),
        std::cmp::Ordering::Greater => 0.0,
    });
    let k = random_orthogonal(&rs(n), &mut rng);
    GroupElement::new(u * diag(&a) * k.matrix(), &[n]).unwrap()
}

fn int_to_group(m: &[i64], n: usize) -> GroupElement {
    GroupElement::new(DMatrix::from_fn(n, n, |i, j| m[i * n + j] as f64), &[n]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn langlands_round_trip(n in 2usize..=4, seed in any::<u64>(), set in 0u64..8) {
        let rs = rs(n);
        let g = elem(n, seed, 2.0);
        let set = RootSet(set & RootSet::full(rs.rank()).0);
        let p = langlands(&g, &rs, &ParabolicIndex::standard(set)).unwrap();
        prop_assert!(rel(&p.reconstruct(), g.matrix()) <= 1e-9);
        for (s, e) in rs.blocks(set) {
            let det = p.m.view((s, s), (e - s, e - s)).determinant();
            prop_assert!((det - 1.0).abs() < 1e-9);
            for i in s..e {
                prop_assert!((p.a[i] - p.a[s]).abs() <= 1e-12 * p.a[s]);
            }
        }
    }

    #[test]
    fn a_part_is_right_k_and_left_n_invariant(n in 2usize..=4, seed in any::<u64>(), set in 0u64..8) {
        let rs = rs(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&rs, &mut rng, 2.0);
        let k = random_orthogonal(&rs, &mut rng);
        let set = RootSet(set & RootSet::full(rs.rank()).0);
        let p = ParabolicIndex::standard(set);
        let a = langlands(&g, &rs, &p).unwrap().a;
        let a_k = langlands(&g.mul(&k), &rs, &p).unwrap().a;
        let mut u = DMatrix::<f64>::identity(n, n);
        for (i, j) in nilradical_basis(&rs, set) {
            u[(i, j)] = ((i * 7 + j * 3 + seed as usize % 5) as f64).sin();
        }
        let a_n = langlands(&GroupElement::new(u, &[n]).unwrap().mul(&g), &rs, &p).unwrap().a;
        for i in 0..n {
            prop_assert!((a_k[i] / a[i] - 1.0).abs() < 1e-9);
            prop_assert!((a_n[i] / a[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn d_function_has_type_p_chi(n in 2usize..=4, seed in any::<u64>(), alpha in 0usize..3) {
        let rs = rs(n);
        let alpha = alpha % rs.rank();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_element(&rs, &mut rng, 1.5);
        let k = random_orthogonal(&rs, &mut rng);
        let set = rs.delta().without(alpha);
        let basis = nilradical_basis(&rs, set);
        // p = u · d with u ∈ N_∅ and d diagonal: χ_P(p) = ∏ d_i / d_j over 𝔫_P.
        let mut u = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in i + 1..n {
                u[(i, j)] = ((seed % 97) as f64 * 0.01 + (i + 2 * j) as f64).cos();
            }
        }
        let logs: Vec<f64> = (0..n).map(|i| (i as f64 - (n - 1) as f64 / 2.0) * 0.3).collect();
        let d: Vec<f64> = logs.iter().map(|x| x.exp()).collect();
        let p = GroupElement::new(u * diag(&d), &[n]).unwrap();
        let chi: f64 = basis.iter().map(|&(i, j)| d[i] / d[j]).product();
        let pi = ParabolicIndex::standard(set);
        let lhs = d_function(&rs, &pi, &k.mul(&g).mul(&p));
        let rhs = chi * d_function(&rs, &pi, &g);
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn reduction_lands_in_siegel_set(n in 2usize..=4, seed in any::<u64>(), spread in 0.0f64..5.0) {
        let g = elem(n, seed, spread);
        let r = reduce(&g);
        let gamma = DMatrix::from_fn(n, n, |i, j| r.gamma[i * n + j] as f64);
        prop_assert!((gamma.determinant() - 1.0).abs() < 1e-9);
        prop_assert!(rel(&(gamma * g.matrix()), r.rep.matrix()) < 1e-9);
        let s = SiegelSet::default();
        prop_assert!(in_siegel(&r.rep, &s));
        prop_assert!(in_siegel_inverse_form(&r.rep, &s));
        prop_assert!((r.swaps as f64) <= swap_bound(g.condition_number(), n));
        // Idempotence up to the overlap of neighbouring domains.
        let again = reduce(&r.rep);
        if !again.gamma_is_identity() {
            for i in 0..n {
                prop_assert!((again.iwasawa.a[i] / r.iwasawa.a[i] - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn reduction_is_gamma_equivariant(
        n in 2usize..=4,
        seed in any::<u64>(),
        moves in prop::collection::vec((0usize..4, 0usize..4, -2i64..=2), 1..6),
    ) {
        let g = deep_element(n, seed);
        let a0 = iwasawa(&g).unwrap().a;
        let gm = random_gamma(n, &moves);
        let r1 = reduce(&g);
        let r2 = reduce(&int_to_group(&gm, n).mul(&g));
        prop_assert!(in_siegel(&r2.rep, &SiegelSet::default()));
        for i in 0..n {
            prop_assert!((r1.iwasawa.a[i] / a0[i] - 1.0).abs() < 1e-6);
        }
        // Off the overlap region the representative is unique up to K.
        if deep_inside(&r2) {
            for i in 0..n {
                prop_assert!((r1.iwasawa.a[i] / r2.iwasawa.a[i] - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn chamber_location_is_exact_and_equivariant(
        xs in prop::collection::vec(-3i32..=3, 4),
        perm_seed in any::<u64>(),
    ) {
        let rs = rs(4);
        let v = centered(&xs);
        let face = rs.locate_chamber(&v);
        prop_assert!(rs.face_contains(&face, &v));
        let group = rs.weyl_group();
        let w = &group[(perm_seed % group.len() as u64) as usize];
        let moved = rs.canonicalize(&rs.locate_chamber(&w.act(&v)));
        let expect = rs.canonicalize(&ChamberFace { w: w.compose(&face.w), set: face.set });
        prop_assert_eq!(moved, expect);
    }

    #[test]
    fn projections_are_orthogonal(n in 2usize..=5, set in 0u64..16) {
        let rs = rs(n);
        let set = RootSet(set & RootSet::full(rs.rank()).0);
        for a in 0..rs.rank() {
            for b in 0..rs.rank() {
                let x = rs.simple(a);
                let y = rs.quasi_fundamental_weights()[b].clone();
                let p1 = rs.project(&x, set);
                let py = rs.project(&y, set);
                let p2 = satake_core::WeightVector {
                    coords: y.coords.iter().zip(&py.coords).map(|(u, v)| u - v).collect(),
                };
                prop_assert!(rs.pair(&p1, &p2).is_zero());
            }
        }
    }

    #[test]
    fn unip_subset_is_the_unique_maximal_one(n in 3usize..=4, xs in prop::collection::vec(-4i32..=4, 4)) {
        let rs = rs(n);
        let v = centered(&xs[..n]);
        let cert = unip_limit_i(&rs, &v).unwrap();
        let ok: Vec<RootSet> = RootSet::all(rs.rank()).filter(|&s| block_mean_predicate(&rs, &v, s)).collect();
        for &s in &ok {
            prop_assert!(s.is_subset(cert.set), "{s} not inside {}", cert.set);
            prop_assert_eq!(unip_predicate(&rs, &v, s), true);
        }
        prop_assert!(ok.contains(&cert.set));
        prop_assert!(cert.unique);
        for (_, x) in &cert.escape_pairings {
            prop_assert!(x.is_positive());
        }
    }

    #[test]
    fn ma_split_is_sound(
        set in 0u64..4,
        xs in prop::collection::vec(-3i32..=3, 3),
        os in prop::collection::vec(-2i32..=2, 3),
    ) {
        let rs = rs(3);
        let set = RootSet(set);
        let v = project_to_center(&rs, &centered(&xs), set);
        let off = project_to_center(&rs, &centered(&os), set);
        let s = ma_split(&rs, &v, &off, set).unwrap();
        prop_assert!(satake_core::limits::weyl_torus_inclusion(&rs, &s.face, set));
        for k in 0..rs.rank() {
            let vals: Vec<Q> = [1, 2, 4]
                .iter()
                .map(|&n| rs.pair_image_root(&s.v_inf.scale(Q::from_integer(n)), &s.face.w, k))
                .collect();
            if s.r_inf.contains(k) {
                prop_assert!(vals[0].is_positive() && vals[0] < vals[1] && vals[1] < vals[2]);
            } else {
                prop_assert!(vals.iter().all(|x| x.is_zero()));
            }
        }
        prop_assert_eq!(&s.v_inf, &v);
        prop_assert!(s.r_inf.union(s.r_zero).union(s.face.set) == rs.delta());
    }

    #[test]
    fn sl3_classification_ignores_recorded_conjugators(
        moves in prop::collection::vec((0usize..3, 0usize..3, -2i64..=2), 1..5),
        which in 0usize..4,
    ) {
        let rs = rs(3);
        let seqs = sample_sequences();
        let seq = seqs[which].clone();
        let mut conj = seq.clone();
        conj.conjugators = ConjugatorPolicy::Recorded(vec![random_gamma(3, &moves)]);
        prop_assert_eq!(sl3_classify(&rs, &seq).unwrap().label, sl3_classify(&rs, &conj).unwrap().label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn delta_is_monotone_in_height(seed in any::<u64>(), kind in 0usize..3) {
        let rs = rs(3);
        let spec = SubgroupSpec::new(match kind {
            0 => SubgroupKind::FullUnipotentRadical(RootSet::EMPTY),
            1 => SubgroupKind::LeviSemisimpleNc(RootSet::single(0)),
            _ => SubgroupKind::OneParamUnipotent(0, 2),
        });
        let g = elem(3, seed, 1.5);
        let d1 = delta_truncated(&spec, &rs, &g, 1).unwrap();
        let d2 = delta_truncated(&spec, &rs, &g, 2).unwrap();
        prop_assert!(d2.value <= d1.value * (1.0 + 1e-12));
        prop_assert!(d1.value.is_finite());
    }

    #[test]
    fn histograms_are_normalized_and_monotone(xs in prop::collection::vec(-3i32..=3, 3), seed in any::<u64>()) {
        let rs = rs(3);
        let spec = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
        let v = centered(&xs).to_f64();
        let g = GroupElement::exp_diag(&v.iter().map(|x| 3.0 * x).collect::<Vec<_>>(), &[3]);
        let m = EmpiricalMeasure::generate(&spec, &rs, &g, 2000, seed, &SamplerOptions::default()).unwrap();
        let mut last = f64::INFINITY;
        for t in [1e4, 1e3, 1e2, 10.0, 2.0] {
            let h = boundary_histogram(&m, &rs, t);
            prop_assert!((h.mass.values().sum::<f64>() - 1.0).abs() < 1e-12);
            let interior = h.get(rs.delta());
            prop_assert!(interior <= last);
            last = interior;
        }
    }
}

/// Oracle for the boundedness predicate: `v^I` is `v` minus its mean on
/// every run of `I`, and `⟨v^I, χ_k⟩` is the `k`-th partial sum.
fn block_mean_predicate(rs: &RootSystem, v: &Direction, set: RootSet) -> bool {
    let n = rs.dim();
    let mut vi = vec![Q::zero(); n];
    for (s, e) in rs.blocks(set) {
        let mean = v.0[s..e].iter().fold(Q::zero(), |a, b| a + b) / Q::from_integer((e - s) as i128);
        for i in s..e {
            vi[i] = v.0[i] - mean;
        }
    }
    let mut partial = Q::zero();
    (0..n - 1).all(|k| {
        partial += vi[k];
        !partial.is_positive()
    })
}

/// Averages `v` over every run of `I`, landing in `Lie(A_I)`.
fn project_to_center(rs: &RootSystem, v: &Direction, set: RootSet) -> Direction {
    let mut out = v.clone();
    for (s, e) in rs.blocks(set) {
        let mean = v.0[s..e].iter().fold(Q::zero(), |a, b| a + b) / Q::from_integer((e - s) as i128);
        for i in s..e {
            out.0[i] = mean;
        }
    }
    out
}

fn sample_sequences() -> Vec<SequenceSpec> {
    let q = |a: i128, b: i128| Q::new(a, b);
    let d = |xs: [(i128, i128); 3]| Direction(xs.iter().map(|&(a, b)| q(a, b)).collect());
    let n_beta = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::single(1)));
    let full = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
    let mut reduced = SequenceSpec::new(n_beta.clone(), d([(2, 5), (-3, 10), (-1, 10)]), vec![2, 5]);
    reduced.bounded = BoundedPart::ReducedLevi { u: [0.0, 0.0, 0.3], rate: q(3, 5), v0: 1.0 };
    vec![
        SequenceSpec::new(full.clone(), d([(6, 5), (-11, 10), (-1, 10)]), vec![2, 5]),
        SequenceSpec::new(n_beta, d([(2, 3), (-1, 3), (-1, 3)]), vec![2, 5]),
        SequenceSpec::new(full, d([(1, 10), (1, 10), (-1, 5)]), vec![2, 5]),
        reduced,
    ]
}

#[test]
fn weyl_identity_face_for_dominant() {
    let rs = rs(3);
    let v = centered(&[2, 0, -2]);
    assert_eq!(rs.locate_chamber(&v).w, WeylElement::identity(3));
}

#[test]
fn histograms_are_gamma_invariant() {
    let rs = rs(3);
    let spec = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::single(1)));
    let base = SequenceSpec::new(spec, centered(&[2, -1, -1]), vec![3]);
    let mut moved = base.clone();
    moved.conjugators = ConjugatorPolicy::Recorded(vec![random_gamma(3, &[(0, 1, 2), (2, 0, -1), (1, 2, 1)])]);
    let opts = SamplerOptions::default();
    let measure = |s: &SequenceSpec| {
        let (h, g) = s.evaluate(&rs, 0).unwrap();
        EmpiricalMeasure::generate(&h, &rs, &g, 20_000, 5, &opts).unwrap()
    };
    let (a, b) = (measure(&base), measure(&moved));
    for t in [1e2, 1e3] {
        let (ha, hb) = (boundary_histogram(&a, &rs, t), boundary_histogram(&b, &rs, t));
        for label in RootSet::all(2) {
            let se = ha.std_error(label).max(hb.std_error(label)).max(1.0 / 20_000f64);
            assert!((ha.get(label) - hb.get(label)).abs() <= 2.0 * se + 1e-12, "{label} at {t}");
        }
    }
}

#[test]
fn doubling_y_cap_moves_fractions_by_at_most_the_tail() {
    let rs = rs(2);
    let spec = SubgroupSpec::new(SubgroupKind::EmbeddedSl2(0));
    let g = GroupElement::identity(&[2]);
    let y = 1e3;
    let a = EmpiricalMeasure::generate(&spec, &rs, &g, 50_000, 3, &SamplerOptions { y_cap: y }).unwrap();
    let b = EmpiricalMeasure::generate(&spec, &rs, &g, 50_000, 3, &SamplerOptions { y_cap: 2.0 * y }).unwrap();
    for t in [1e2, 5e2] {
        let (ha, hb) = (boundary_histogram(&a, &rs, t), boundary_histogram(&b, &rs, t));
        for label in RootSet::all(1) {
            let se = ha.std_error(label).max(hb.std_error(label));
            let bound = satake_core::measures::truncation_loss(y) + 2.0 * se;
            assert!((ha.get(label) - hb.get(label)).abs() < bound, "{label} at {t}");
        }
    }
}

#[test]
fn seeds_give_bit_identical_points() {
    let rs = rs(3);
    let spec = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
    let g = GroupElement::exp_diag(&[1.0, 0.5, -1.5], &[3]);
    let opts = SamplerOptions::default();
    let a = EmpiricalMeasure::generate(&spec, &rs, &g, 9000, 77, &opts).unwrap();
    let b = EmpiricalMeasure::generate(&spec, &rs, &g, 9000, 77, &opts).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!(p.iwasawa.a, q.iwasawa.a);
        assert_eq!(p.gamma, q.gamma);
    }
    let _ = iwasawa(&g).unwrap();
}
