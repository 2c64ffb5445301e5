//! Root systems of type A and finite products of them, with exact arithmetic.
//!
//! Directions in Lie(A) are written in diagonal coordinates: one block of
//! length `n` per `SL_n` factor, each block summing to zero. The simple root
//! `α_k` of a factor pairs with a direction as `v_i − v_{i+1}`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{dot, q, Direction, QMatrix, Q};

/// A subset of the simple roots, stored as a bitmask over global root indices.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RootSet(pub u64);

impl RootSet {
    pub const EMPTY: RootSet = RootSet(0);

    pub fn full(rank: usize) -> Self {
        RootSet(if rank == 64 { u64::MAX } else { (1u64 << rank) - 1 })
    }

    pub fn single(i: usize) -> Self {
        RootSet(1 << i)
    }

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        idx.into_iter().fold(RootSet::EMPTY, |s, i| s.with(i))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        RootSet(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Self {
        RootSet(self.0 & !(1 << i))
    }

    pub fn union(self, o: RootSet) -> Self {
        RootSet(self.0 | o.0)
    }

    pub fn intersect(self, o: RootSet) -> Self {
        RootSet(self.0 & o.0)
    }

    pub fn minus(self, o: RootSet) -> Self {
        RootSet(self.0 & !o.0)
    }

    pub fn complement(self, rank: usize) -> Self {
        RootSet::full(rank).minus(self)
    }

    pub fn is_subset(self, o: RootSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// All subsets of `Δ` for a system of the given rank.
    pub fn all(rank: usize) -> impl Iterator<Item = RootSet> {
        (0..1u64 << rank).map(RootSet)
    }

    /// Parses `{}`, `{1,2}`, `a1,a2`, `α1 α2` (1-based labels).
    pub fn parse(s: &str, rank: usize) -> Result<Self> {
        let body = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut set = RootSet::EMPTY;
        for tok in body.split([',', ' ']).filter(|t| !t.is_empty()) {
            let digits = tok.trim_start_matches(['a', 'α']);
            let k: usize = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad root label {tok:?}")))?;
            if k == 0 || k > rank {
                return Err(Error::Parse(format!("root label {tok:?} out of range 1..={rank}")));
            }
            set = set.with(k - 1);
        }
        Ok(set)
    }
}

impl fmt::Display for RootSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|i| format!("a{}", i + 1)).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for RootSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Element of X*(A)⊗ℚ in the basis of simple roots.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WeightVector {
    pub coords: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSystem {
    /// Matrix size of each simple factor (`SL_n` contributes `n`).
    factors: Vec<usize>,
    /// Diagonal coordinate pair `(i, i+1)` of each simple root.
    root_coords: Vec<(usize, usize)>,
    /// Factor index of each simple root.
    root_factor: Vec<usize>,
    /// First diagonal coordinate of each factor.
    offsets: Vec<usize>,
    cartan: QMatrix,
    pairing: QMatrix,
}

impl RootSystem {
    pub fn type_a(n: usize) -> Result<Self> {
        Self::product(&[n])
    }

    /// Product of `SL_{n_i}` factors, roots numbered factor by factor.
    pub fn product(factors: &[usize]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("root system needs at least one factor".into()));
        }
        for &n in factors {
            if n < 2 {
                return Err(Error::InvalidInput(format!("SL_{n} has no roots (need n >= 2)")));
            }
            if n > 9 {
                return Err(Error::InvalidInput(format!("SL_{n} exceeds supported size 9")));
            }
        }
        let mut root_coords = Vec::new();
        let mut root_factor = Vec::new();
        let mut offsets = Vec::new();
        let mut off = 0;
        for (f, &n) in factors.iter().enumerate() {
            offsets.push(off);
            for i in 0..n - 1 {
                root_coords.push((off + i, off + i + 1));
                root_factor.push(f);
            }
            off += n;
        }
        let r = root_coords.len();
        if r > 64 {
            return Err(Error::InvalidInput("rank above 64".into()));
        }
        // Trace form on diagonal coordinates; for type A this is the Cartan matrix.
        let pairing = QMatrix::from_fn(r, r, |i, j| {
            let (a0, a1) = root_coords[i];
            let (b0, b1) = root_coords[j];
            let e = |x: usize, y: usize| if x == y { q(1) } else { q(0) };
            e(a0, b0) - e(a0, b1) - e(a1, b0) + e(a1, b1)
        });
        let cartan = QMatrix::from_fn(r, r, |i, j| q(2) * pairing[(i, j)] / pairing[(j, j)]);
        Ok(RootSystem { factors: factors.to_vec(), root_coords, root_factor, offsets, cartan, pairing })
    }

    pub fn rank(&self) -> usize {
        self.root_coords.len()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Number of diagonal coordinates (sum of factor sizes).
    pub fn dim(&self) -> usize {
        self.factors.iter().sum()
    }

    pub fn cartan(&self) -> &QMatrix {
        &self.cartan
    }

    pub fn pairing_matrix(&self) -> &QMatrix {
        &self.pairing
    }

    pub fn root_coords(&self, k: usize) -> (usize, usize) {
        self.root_coords[k]
    }

    pub fn root_factor(&self, k: usize) -> usize {
        self.root_factor[k]
    }

    /// Diagonal coordinate range of factor `f`.
    pub fn factor_range(&self, f: usize) -> std::ops::Range<usize> {
        self.offsets[f]..self.offsets[f] + self.factors[f]
    }

    pub fn delta(&self) -> RootSet {
        RootSet::full(self.rank())
    }

    pub fn root_label(&self, k: usize) -> String {
        format!("a{}", k + 1)
    }

    /// Pairing of two weights given in the Δ-basis.
    pub fn pair(&self, x: &WeightVector, y: &WeightVector) -> Q {
        dot(&x.coords, &self.pairing.mul_vec(&y.coords))
    }

    pub fn simple(&self, k: usize) -> WeightVector {
        let mut coords = vec![Q::zero(); self.rank()];
        coords[k] = Q::one();
        WeightVector { coords }
    }

    /// Diagonal-coordinate realization of a weight.
    pub fn weight_to_diag(&self, w: &WeightVector) -> Direction {
        let mut v = vec![Q::zero(); self.dim()];
        for (k, c) in w.coords.iter().enumerate() {
            let (i, j) = self.root_coords[k];
            v[i] += c;
            v[j] -= c;
        }
        Direction(v)
    }

    /// `⟨v, α_k⟩` for a direction in diagonal coordinates.
    pub fn pair_root(&self, v: &Direction, k: usize) -> Q {
        let (i, j) = self.root_coords[k];
        v.0[i] - v.0[j]
    }

    /// `⟨v, χ⟩` for a direction and a weight in the Δ-basis.
    pub fn pair_weight(&self, v: &Direction, w: &WeightVector) -> Q {
        w.coords.iter().enumerate().fold(Q::zero(), |acc, (k, c)| acc + c * self.pair_root(v, k))
    }

    /// Checks that `v` has the right length and zero trace on every factor.
    pub fn check_direction(&self, v: &Direction) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "direction has {} coordinates, expected {}",
                v.len(),
                self.dim()
            )));
        }
        for f in 0..self.factors.len() {
            let s = self.factor_range(f).fold(Q::zero(), |acc, i| acc + v.0[i]);
            if !s.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "direction block {} sums to {s}, must be 0",
                    f + 1
                )));
            }
        }
        Ok(())
    }

    /// Exact validity checks on the stored Cartan data and pairing.
    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        for i in 0..r {
            if self.cartan[(i, i)] != q(2) {
                return Err(Error::Numerical("cartan diagonal != 2".into()));
            }
            for j in 0..r {
                let c = self.cartan[(i, j)];
                if i != j && !(c.is_zero() || c == q(-1)) {
                    return Err(Error::Numerical(format!("cartan[{i}][{j}] = {c}")));
                }
            }
        }
        if !self.pairing.is_symmetric() || !self.pairing.is_positive_definite() {
            return Err(Error::Numerical("pairing not symmetric positive definite".into()));
        }
        for s in 0..r {
            for i in 0..r {
                for j in 0..r {
                    let x = self.reflect(s, &self.simple(i));
                    let y = self.reflect(s, &self.simple(j));
                    if self.pair(&x, &y) != self.pairing[(i, j)] {
                        return Err(Error::Numerical(format!("pairing not invariant under s{}", s + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Simple reflection `s_k x = x − 2(x,α_k)/(α_k,α_k) α_k`.
    pub fn reflect(&self, k: usize, x: &WeightVector) -> WeightVector {
        let ak = self.simple(k);
        let c = q(2) * self.pair(x, &ak) / self.pairing[(k, k)];
        let mut coords = x.coords.clone();
        coords[k] -= c;
        WeightVector { coords }
    }

    /// Orthogonal projection of `x` onto `span(I)`, exact.
    pub fn project(&self, x: &WeightVector, set: RootSet) -> WeightVector {
        let idx: Vec<usize> = set.iter().collect();
        let mut coords = vec![Q::zero(); self.rank()];
        if idx.is_empty() {
            return WeightVector { coords };
        }
        let gram = self.pairing.principal(&idx);
        let rhs: Vec<Q> = idx.iter().map(|&b| self.pair(x, &self.simple(b))).collect();
        let c = gram.solve(&rhs).expect("principal Gram matrix of a positive form is invertible");
        for (t, &b) in idx.iter().enumerate() {
            coords[b] = c[t];
        }
        WeightVector { coords }
    }

    /// Inverse pairing matrix; column `α` gives `χ_α` in the Δ-basis.
    pub fn inverse_pairing(&self) -> QMatrix {
        self.pairing.inverse().expect("pairing is positive definite")
    }

    /// Quasi-fundamental weights normalized so that `(χ_α, β) = δ_{αβ}`.
    pub fn quasi_fundamental_weights(&self) -> Vec<WeightVector> {
        let inv = self.inverse_pairing();
        (0..self.rank()).map(|k| WeightVector { coords: inv.column(k) }).collect()
    }

    /// Projections `π₁(χ_α)`, `α ∈ I`, onto `span(I)`. Each is verified to be
    /// quasi-fundamental for the subsystem `I`.
    pub fn restrict_weights(&self, set: RootSet) -> Result<Vec<WeightVector>> {
        let chi = self.quasi_fundamental_weights();
        let mut out = Vec::new();
        for a in set.iter() {
            let p = self.project(&chi[a], set);
            for b in set.iter() {
                let v = self.pair(&p, &self.simple(b));
                let ok = if a == b { v.is_positive() } else { v.is_zero() };
                if !ok {
                    return Err(Error::Numerical(format!(
                        "projection of chi_{} is not quasi-fundamental on {set}",
                        a + 1
                    )));
                }
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Canonical chamber face containing `v`: the unique `(w, I)` with
    /// `⟨v, wα⟩ = 0` on `I` and `> 0` off `I`, `w` lexicographically least.
    pub fn locate_chamber(&self, v: &Direction) -> ChamberFace {
        self.locate_lex(v, None)
    }

    /// As [`Self::locate_chamber`] but ties in `v` are broken by `tie`, so
    /// that `J` collects the roots vanishing on both.
    pub fn locate_chamber_pair(&self, v: &Direction, tie: &Direction) -> ChamberFace {
        self.locate_lex(v, Some(tie))
    }

    fn locate_lex(&self, v: &Direction, tie: Option<&Direction>) -> ChamberFace {
        let mut perm = vec![0; self.dim()];
        let mut set = RootSet::EMPTY;
        let mut root = 0;
        for f in 0..self.factors.len() {
            let range = self.factor_range(f);
            let mut order: Vec<usize> = range.clone().collect();
            let key = |i: usize| (v.0[i], tie.map_or(Q::zero(), |t| t.0[i]));
            // Stable sort keeps equal entries in ascending index order.
            order.sort_by(|&a, &b| key(b).cmp(&key(a)));
            for (p, &i) in order.iter().enumerate() {
                perm[range.start + p] = i;
            }
            for p in 0..order.len() - 1 {
                if key(order[p]) == key(order[p + 1]) {
                    set = set.with(root + p);
                }
            }
            root += self.factors[f] - 1;
        }
        ChamberFace { w: WeylElement { perm }, set }
    }

    /// `true` iff `v` lies in the open cone `w·C_I`.
    pub fn face_contains(&self, face: &ChamberFace, v: &Direction) -> bool {
        (0..self.rank()).all(|k| {
            let x = self.pair_image_root(v, &face.w, k);
            if face.set.contains(k) { x.is_zero() } else { x.is_positive() }
        })
    }

    /// `⟨v, wα_k⟩`.
    pub fn pair_image_root(&self, v: &Direction, w: &WeylElement, k: usize) -> Q {
        let (i, j) = self.root_coords[k];
        v.0[w.perm[i]] - v.0[w.perm[j]]
    }

    /// Chooses the lexicographically least representative of `w·W_I`.
    pub fn canonicalize(&self, face: &ChamberFace) -> ChamberFace {
        let mut perm = face.w.perm.clone();
        for (start, end) in self.blocks(face.set) {
            perm[start..end].sort_unstable();
        }
        ChamberFace { w: WeylElement { perm }, set: face.set }
    }

    /// Maximal runs of diagonal positions linked by roots of `set`, as
    /// half-open ranges.
    pub fn blocks(&self, set: RootSet) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for f in 0..self.factors.len() {
            let range = self.factor_range(f);
            let mut start = range.start;
            for i in range.clone() {
                let linked = i + 1 < range.end && {
                    let k = self.root_of_coord(i);
                    set.contains(k)
                };
                if !linked {
                    out.push((start, i + 1));
                    start = i + 1;
                }
            }
        }
        out
    }

    /// Global index of the simple root `(i, i+1)`; `i` must not be the last
    /// coordinate of its factor.
    fn root_of_coord(&self, i: usize) -> usize {
        let f = self.offsets.iter().rposition(|&o| o <= i).unwrap();
        i - f
    }

    /// Block sizes of the standard flag for `P_I`.
    pub fn flag_shape(&self, set: RootSet) -> Vec<usize> {
        self.blocks(set).into_iter().map(|(a, b)| b - a).collect()
    }

    pub fn weyl_identity(&self) -> WeylElement {
        WeylElement { perm: (0..self.dim()).collect() }
    }

    /// All Weyl group elements (factor-preserving permutations).
    pub fn weyl_group(&self) -> Vec<WeylElement> {
        let mut acc = vec![Vec::new()];
        for f in 0..self.factors.len() {
            let range = self.factor_range(f);
            let perms = permutations(&range.collect::<Vec<_>>());
            let mut next = Vec::with_capacity(acc.len() * perms.len());
            for a in &acc {
                for p in &perms {
                    let mut x: Vec<usize> = a.clone();
                    x.extend_from_slice(p);
                    next.push(x);
                }
            }
            acc = next;
        }
        acc.into_iter().map(|perm| WeylElement { perm }).collect()
    }

    /// Every canonical face of the chamber complex.
    pub fn all_faces(&self) -> Vec<ChamberFace> {
        let mut seen = BTreeSet::new();
        for w in self.weyl_group() {
            for set in RootSet::all(self.rank()) {
                seen.insert(self.canonicalize(&ChamberFace { w: w.clone(), set }));
            }
        }
        seen.into_iter().collect()
    }

    /// Faces whose cone lies in `∩_{α∈I} H_α`: the Levi sphere of `A_I`.
    pub fn levi_sphere(&self, set: RootSet) -> Vec<ChamberFace> {
        self.all_faces().into_iter().filter(|f| self.face_in_walls(f, set)).collect()
    }

    /// Faces of the Levi sphere with the largest cones; these correspond to
    /// the parabolics minimal among those containing the Levi of `P_I`.
    pub fn levi_sphere_maximal(&self, set: RootSet) -> Vec<ChamberFace> {
        let faces = self.levi_sphere(set);
        let min = faces.iter().map(|f| f.set.len()).min().unwrap_or(0);
        faces.into_iter().filter(|f| f.set.len() == min).collect()
    }

    /// `w·C_J ⊆ H_α` for every `α ∈ set`.
    pub fn face_in_walls(&self, face: &ChamberFace, set: RootSet) -> bool {
        let inv = face.w.inverse();
        let blocks = self.blocks(face.set);
        let block_of = |x: usize| blocks.iter().position(|&(a, b)| a <= x && x < b);
        set.iter().all(|k| {
            let (i, j) = self.root_coords[k];
            block_of(inv.perm[i]) == block_of(inv.perm[j])
        })
    }
}

/// Weyl group element as a permutation of diagonal coordinates that preserves
/// every factor; `perm[i]` is the image of coordinate `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct WeylElement {
    pub perm: Vec<usize>,
}

impl WeylElement {
    pub fn identity(n: usize) -> Self {
        WeylElement { perm: (0..n).collect() }
    }

    /// Longest element of every factor (reversal within each block).
    pub fn longest(rs: &RootSystem) -> Self {
        let mut perm = vec![0; rs.dim()];
        for f in 0..rs.factors().len() {
            let r = rs.factor_range(f);
            for i in r.clone() {
                perm[i] = r.end - 1 - (i - r.start);
            }
        }
        WeylElement { perm }
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.perm.iter().all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        WeylElement { perm: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &WeylElement) -> Self {
        WeylElement { perm: other.perm.iter().map(|&i| self.perm[i]).collect() }
    }

    /// `(w·v)_{w(i)} = v_i`.
    pub fn act(&self, v: &Direction) -> Direction {
        let mut out = vec![Q::zero(); v.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = v.0[i];
        }
        Direction(out)
    }

    pub fn sign(&self) -> i32 {
        let mut seen = vec![false; self.perm.len()];
        let mut sign = 1;
        for s in 0..self.perm.len() {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        sign
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.perm.iter().map(|p| (p + 1).to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// The open cone `w·C_I`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ChamberFace {
    pub w: WeylElement,
    pub set: RootSet,
}

impl fmt::Display for ChamberFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.w, self.set)
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}
