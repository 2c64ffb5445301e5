//! Declarative experiments: a TOML file names a group, a sequence of
//! translated homogeneous measures and sampling parameters; running it
//! compares the classifier's predicted component with Monte Carlo
//! histograms.
//!
//! ```toml
//! schema = 1
//! name = "sl2_cusp"
//! group = "sl(2)"
//! classifier = "auto"
//!
//! [sequence]
//! subgroup = "full_unipotent_radical{}"
//! direction = ["1", "-1"]
//! indices = [1, 3, 5]
//!
//! [sampling]
//! count = 100000
//! seed = 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{
    classify, levi_translate_classify, ma_split, sl2r_classify, sl3_classify, unip_limit_i, BoundedPart,
    ConjugatorPolicy, LimitDescriptor, SequenceSpec, SupportKind,
};
use crate::measures::{
    boundary_histogram, BoundaryHistogram, EmpiricalMeasure, IntMatrix, SamplerOptions, SubgroupKind, SubgroupSpec,
    DEFAULT_T_ESC, DEFAULT_Y_CAP,
};
use crate::rational::{parse_q, Direction};
use crate::reduction::write_columnar;
use crate::rootsys::{RootSet, RootSystem};

pub const SCHEMA_VERSION: u32 = 1;
/// Escape thresholds every report sweeps.
pub const T_ESC_SWEEP: [f64; 3] = [1e2, 1e3, 1e4];
/// Minimum mass of the predicted bin for agreement.
pub const AGREEMENT_MASS: f64 = 0.95;
pub const MIN_STATISTICAL_COUNT: usize = 1000;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_DISAGREE: i32 = 2;
pub const EXIT_NOT_COVERED: i32 = 3;
pub const EXIT_INPUT: i32 = 4;

/// Exit code for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotCovered(_) => EXIT_NOT_COVERED,
        _ => EXIT_INPUT,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: u32,
    name: Option<String>,
    description: Option<String>,
    group: String,
    #[serde(default)]
    classifier: Option<String>,
    sequence: SequenceFile,
    sampling: SamplingFile,
}

#[derive(Deserialize, Serialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn rational(&self) -> Result<crate::rational::Q> {
        match self {
            Number::Int(i) => Ok(crate::rational::Q::from_integer(*i as i128)),
            Number::Text(s) => parse_q(s),
            Number::Float(f) => parse_q(&f.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceFile {
    subgroup: String,
    #[serde(default)]
    subgroup_conjugator: Option<Vec<Vec<i64>>>,
    direction: Vec<Number>,
    indices: Vec<u32>,
    #[serde(default)]
    bounded: Option<BoundedFile>,
    #[serde(default)]
    conjugators: Option<Vec<Vec<Vec<i64>>>>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum BoundedFile {
    Fixed {
        #[serde(default)]
        unipotent: Vec<UnipotentEntry>,
        #[serde(default)]
        offset: Option<Vec<Number>>,
    },
    ReducedLevi { u: [f64; 3], rate: Number, v0: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnipotentEntry {
    i: usize,
    j: usize,
    value: Number,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplingFile {
    count: usize,
    seed: u64,
    #[serde(default)]
    y_cap: Option<f64>,
    #[serde(default)]
    t_esc: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierChoice {
    Auto,
    Sl3,
    Sl2r,
    Unip,
    Levi,
    Ma,
}

impl std::str::FromStr for ClassifierChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => ClassifierChoice::Auto,
            "sl3" => ClassifierChoice::Sl3,
            "sl2r" => ClassifierChoice::Sl2r,
            "unip" => ClassifierChoice::Unip,
            "levi" => ClassifierChoice::Levi,
            "ma" => ClassifierChoice::Ma,
            other => return Err(Error::Parse(format!("unknown classifier {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
    pub y_cap: f64,
    pub t_esc: Vec<f64>,
}

/// A parsed, validated experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub group: String,
    pub rs: RootSystem,
    pub classifier: ClassifierChoice,
    pub sequence: SequenceSpec,
    pub sampling: Sampling,
}

/// `sl(n)` or `sl2_power(r)`.
pub fn parse_group(s: &str) -> Result<RootSystem> {
    let s = s.trim();
    let arg = |p: &str| s.strip_prefix(p).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
    if let Some(n) = arg("sl") {
        let n: usize = n.trim().parse().map_err(|_| Error::Parse(format!("bad group {s:?}")))?;
        return RootSystem::type_a(n);
    }
    if let Some(r) = arg("sl2_power") {
        let r: usize = r.trim().parse().map_err(|_| Error::Parse(format!("bad group {s:?}")))?;
        if r == 0 {
            return Err(Error::InvalidInput("sl2_power needs at least one factor".into()));
        }
        return RootSystem::product(&vec![2; r]);
    }
    Err(Error::Parse(format!("unknown group {s:?}; expected sl(n) or sl2_power(r)")))
}

fn flatten(rows: &[Vec<i64>], d: usize) -> Result<IntMatrix> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput(format!("integer matrix must be {d}x{d}")));
    }
    Ok(rows.concat())
}

fn direction(items: &[Number]) -> Result<Direction> {
    Ok(Direction(items.iter().map(Number::rational).collect::<Result<_>>()?))
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
        if file.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "{origin}: schema {} is not supported (expected {SCHEMA_VERSION})",
                file.schema
            )));
        }
        let rs = parse_group(&file.group)?;
        let d = rs.dim();
        let kind: SubgroupKind = file.sequence.subgroup.parse()?;
        let subgroup = match &file.sequence.subgroup_conjugator {
            None => SubgroupSpec::new(kind),
            Some(rows) => SubgroupSpec::conjugated(kind, flatten(rows, d)?),
        };
        let dir = direction(&file.sequence.direction)?;
        let mut sequence = SequenceSpec::new(subgroup, dir, file.sequence.indices.clone());
        if let Some(b) = file.sequence.bounded {
            sequence.bounded = match b {
                BoundedFile::Fixed { unipotent, offset } => {
                    let mut entries = Vec::new();
                    for e in unipotent {
                        if e.i == 0 || e.j == 0 {
                            return Err(Error::InvalidInput("unipotent entries use 1-based indices".into()));
                        }
                        entries.push(((e.i - 1, e.j - 1), e.value.rational()?));
                    }
                    let offset = match offset {
                        Some(o) => direction(&o)?,
                        None => Direction::zero(d),
                    };
                    BoundedPart::Fixed { unipotent: entries, offset }
                }
                BoundedFile::ReducedLevi { u, rate, v0 } => BoundedPart::ReducedLevi { u, rate: rate.rational()?, v0 },
            };
        }
        if let Some(list) = &file.sequence.conjugators {
            sequence.conjugators =
                ConjugatorPolicy::Recorded(list.iter().map(|m| flatten(m, d)).collect::<Result<_>>()?);
        }
        sequence.validate(&rs)?;
        let classifier = match &file.classifier {
            None => ClassifierChoice::Auto,
            Some(s) => s.parse()?,
        };
        let sampling = Sampling {
            count: file.sampling.count,
            seed: file.sampling.seed,
            y_cap: file.sampling.y_cap.unwrap_or(DEFAULT_Y_CAP),
            t_esc: file.sampling.t_esc.unwrap_or_else(|| T_ESC_SWEEP.to_vec()),
        };
        if sampling.count < MIN_STATISTICAL_COUNT {
            return Err(Error::InvalidInput(format!("sample count must be at least {MIN_STATISTICAL_COUNT}")));
        }
        if !(sampling.y_cap > 1.0) {
            return Err(Error::InvalidInput("y_cap must exceed 1".into()));
        }
        let floor = 2.0 / 3f64.sqrt();
        if sampling.t_esc.is_empty() || sampling.t_esc.iter().any(|&t| !(t > floor)) {
            return Err(Error::InvalidInput(format!("every t_esc must exceed {floor:.4}")));
        }
        Ok(Scenario {
            name: file.name.unwrap_or_else(|| origin.to_string()),
            description: file.description.unwrap_or_default(),
            group: file.group,
            rs,
            classifier,
            sequence,
            sampling,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        Self::parse(&text, stem)
    }
}

/// Runs the chosen classifier on the sequence.
pub fn predict(rs: &RootSystem, seq: &SequenceSpec, choice: ClassifierChoice) -> Result<LimitDescriptor> {
    match choice {
        ClassifierChoice::Auto => classify(rs, seq),
        ClassifierChoice::Sl3 => sl3_classify(rs, seq),
        ClassifierChoice::Sl2r => sl2r_classify(rs, seq),
        ClassifierChoice::Unip => {
            if seq.subgroup != SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY)) {
                return Err(Error::NotCovered("unipotent classifier needs the maximal unipotent subgroup".into()));
            }
            let cert = unip_limit_i(rs, &seq.direction)?;
            let trace = vec![
                "maximal unipotent subgroup translated by exp(n v)".to_string(),
                format!("maximal I with bounded characters: {}", cert.set),
            ];
            Ok(descriptor(rs, Some(cert.set), trace))
        }
        ClassifierChoice::Levi => match &seq.subgroup.kind {
            SubgroupKind::LeviSemisimpleNc(s) if s.len() + 1 == rs.rank() => {
                levi_translate_classify(rs, rs.delta().minus(*s).iter().next().unwrap(), seq)
            }
            _ => Err(Error::NotCovered("Levi classifier needs the Levi factor of a maximal parabolic".into())),
        },
        ClassifierChoice::Ma => {
            let set = match &seq.subgroup.kind {
                SubgroupKind::LeviSemisimpleNc(s) => *s,
                SubgroupKind::Trivial => RootSet::EMPTY,
                _ => return Err(Error::NotCovered("torus-translate classifier needs H inside M_I".into())),
            };
            let offset = match &seq.bounded {
                BoundedPart::Fixed { unipotent, offset } if unipotent.is_empty() => offset.clone(),
                _ => return Err(Error::NotCovered("torus-translate classifier needs g_n in A_I".into())),
            };
            let split = ma_split(rs, &seq.direction, &offset, set)?;
            let trace = vec![
                format!("chamber of the translate: w = {}, J = {}", split.face.w, split.face.set),
                format!("R_inf = {}, R_0 = {}", split.r_inf, split.r_zero),
                format!("supported on w P_(J+R_0) w^-1 with J+R_0 = {}", split.label),
            ];
            let mut d = descriptor(rs, Some(split.label), trace);
            d.weyl = Some(split.face.w);
            Ok(d)
        }
    }
}

fn descriptor(rs: &RootSystem, label: Option<RootSet>, trace: Vec<String>) -> LimitDescriptor {
    let support = match label {
        Some(l) if l == rs.delta() => SupportKind::Interior,
        Some(_) => SupportKind::BoundaryHomogeneous,
        None => SupportKind::DiracPoint,
    };
    LimitDescriptor { label, support, weyl: None, trace }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRecord {
    pub index: u32,
    pub t_esc: f64,
    pub mass: BTreeMap<String, f64>,
    pub argmax: String,
    pub argmax_mass: f64,
    pub std_error: f64,
}

impl HistogramRecord {
    fn from_histogram(index: u32, h: &BoundaryHistogram) -> Self {
        let (label, m) = h.argmax().unwrap_or((RootSet::EMPTY, 0.0));
        HistogramRecord {
            index,
            t_esc: h.t_esc,
            mass: h.mass.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            argmax: label.to_string(),
            argmax_mass: m,
            std_error: h.std_error(label),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Disagree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub label: Option<String>,
    pub support: String,
    pub weyl: Option<String>,
    pub trace: Vec<String>,
}

/// Structured summary; contains no timing so equal seeds give equal bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub name: String,
    pub group: String,
    pub subgroup: String,
    pub direction: Vec<String>,
    pub classifier: ClassifierChoice,
    pub predicted: PredictionRecord,
    /// Label compared against the histograms (the prediction, or the
    /// largest-index argmax when the theory leaves it to the data).
    pub compared_label: String,
    pub sampling: Sampling,
    pub truncation_loss: f64,
    pub histograms: Vec<HistogramRecord>,
    pub verdict: Verdict,
}

/// Output of [`run_scenario`]: the report plus the reduced points per
/// index (for dumps) and the wall time.
pub struct RunOutput {
    pub report: Report,
    pub measures: Vec<(u32, EmpiricalMeasure)>,
    pub elapsed_secs: f64,
}

/// Options that override the file.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub y_cap: Option<f64>,
    /// Evaluate only the largest index.
    pub last_index_only: bool,
}

pub fn run_scenario(sc: &Scenario, ov: &RunOverrides) -> Result<RunOutput> {
    let start = Instant::now();
    let rs = &sc.rs;
    let predicted = predict(rs, &sc.sequence, sc.classifier)?;
    let mut sampling = sc.sampling.clone();
    if let Some(s) = ov.seed {
        sampling.seed = s;
    }
    if let Some(n) = ov.samples {
        if n < 1 {
            return Err(Error::InvalidInput("sample count must be at least 1".into()));
        }
        sampling.count = n;
    }
    if let Some(y) = ov.y_cap {
        sampling.y_cap = y;
    }
    let opts = SamplerOptions { y_cap: sampling.y_cap };
    let positions: Vec<usize> = if ov.last_index_only {
        vec![sc.sequence.largest_index_position()]
    } else {
        (0..sc.sequence.indices.len()).collect()
    };
    let mut measures = Vec::new();
    let mut histograms = Vec::new();
    let mut loss = 0.0;
    for &pos in &positions {
        let n = sc.sequence.indices[pos];
        let (h, g) = sc.sequence.evaluate(rs, pos)?;
        let m = EmpiricalMeasure::generate(&h, rs, &g, sampling.count, sampling.seed, &opts)?;
        loss = m.truncation_loss;
        for &t in &sampling.t_esc {
            histograms.push((n, boundary_histogram(&m, rs, t)));
        }
        measures.push((n, m));
    }
    let last = *sc.sequence.indices.last().unwrap();
    let at_last: Vec<&BoundaryHistogram> = histograms.iter().filter(|(n, _)| *n == last).map(|(_, h)| h).collect();
    let compared = match predicted.label {
        Some(l) => l,
        None => {
            let reference = at_last
                .iter()
                .min_by(|a, b| (a.t_esc - DEFAULT_T_ESC).abs().total_cmp(&(b.t_esc - DEFAULT_T_ESC).abs()))
                .expect("at least one threshold");
            reference.argmax().map(|(l, _)| l).unwrap_or(RootSet::EMPTY)
        }
    };
    let agree = at_last
        .iter()
        .all(|h| matches!(h.argmax(), Some((l, m)) if l == compared && m >= AGREEMENT_MASS));
    let report = Report {
        schema: SCHEMA_VERSION,
        name: sc.name.clone(),
        group: sc.group.clone(),
        subgroup: sc.sequence.subgroup.kind.to_string(),
        direction: sc.sequence.direction.strings(),
        classifier: sc.classifier,
        predicted: PredictionRecord {
            label: predicted.label.map(|l| l.to_string()),
            support: predicted.support.to_string(),
            weyl: predicted.weyl.as_ref().map(|w| w.to_string()),
            trace: predicted.trace.clone(),
        },
        compared_label: compared.to_string(),
        sampling,
        truncation_loss: loss,
        histograms: histograms.iter().map(|(n, h)| HistogramRecord::from_histogram(*n, h)).collect(),
        verdict: if agree { Verdict::Pass } else { Verdict::Disagree },
    };
    Ok(RunOutput { report, measures, elapsed_secs: start.elapsed().as_secs_f64() })
}

impl Report {
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass => EXIT_PASS,
            Verdict::Disagree => EXIT_DISAGREE,
        }
    }

    /// Human-readable verdict table.
    pub fn verdict_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario   {}", self.name);
        let _ = writeln!(s, "group      {}   subgroup {}", self.group, self.subgroup);
        let _ = writeln!(s, "direction  ({})", self.direction.join(", "));
        let _ = writeln!(
            s,
            "predicted  {} [{}]",
            self.predicted.label.as_deref().unwrap_or("(from data)"),
            self.predicted.support
        );
        for t in &self.predicted.trace {
            let _ = writeln!(s, "  - {t}");
        }
        let _ = writeln!(s, "{:>6} {:>10} {:>12} {:>10} {:>10}", "n", "T_esc", "argmax", "mass", "std_err");
        for h in &self.histograms {
            let _ = writeln!(
                s,
                "{:>6} {:>10.0e} {:>12} {:>10.4} {:>10.2e}",
                h.index, h.t_esc, h.argmax, h.argmax_mass, h.std_error
            );
        }
        let _ = writeln!(
            s,
            "verdict    {} (label {} needs mass >= {AGREEMENT_MASS} at n = {})",
            match self.verdict {
                Verdict::Pass => "PASS",
                Verdict::Disagree => "DISAGREE",
            },
            self.compared_label,
            self.histograms.last().map_or(0, |h| h.index)
        );
        s
    }
}

/// Writes `summary.json`, `verdict.txt` and `points_n<k>.txt` into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.json"), out.report.summary_json())?;
    fs::write(dir.join("verdict.txt"), out.report.verdict_table())?;
    for (n, m) in &out.measures {
        let mut f = std::io::BufWriter::new(fs::File::create(dir.join(format!("points_n{n}.txt")))?);
        write_columnar(&mut f, &m.points)?;
        f.flush()?;
    }
    Ok(())
}

/// Scenario files shipped with the crate, as `(name, text)`.
pub fn bundled() -> Vec<(&'static str, &'static str)> {
    macro_rules! b {
        ($($n:literal),* $(,)?) => { vec![$(($n, include_str!(concat!("../scenarios/", $n, ".toml")))),*] };
    }
    b![
        "sl2_cusp",
        "sl2r_mixed",
        "sl3_case1",
        "sl3_case2_1",
        "sl3_case2_2_1",
        "sl3_case2_2_2_1",
        "sl3_case2_2_2_2_1",
        "sl3_case2_2_2_2_2",
        "sl3_case2_2_2_2_3_1",
        "sl3_case2_2_2_2_3_2",
        "sl3_levi",
        "sl3_torus",
        "sl4_unipotent",
    ]
}

pub fn bundled_scenario(name: &str) -> Option<Result<Scenario>> {
    bundled().into_iter().find(|(n, _)| *n == name).map(|(n, t)| Scenario::parse(t, n))
}

/// Subgroup catalog with the results covering each kind.
pub fn catalog_text() -> String {
    let rows: [(&str, &str, &str); 7] = [
        ("full_unipotent_radical{I}", "N_{P_I}", "SL_3 case tree; maximal-I theorem for the maximal unipotent subgroup"),
        ("levi_semisimple_nc{I}", "semisimple part of M_I", "Levi-translate theorem (maximal parabolics); torus-translate theorem"),
        ("embedded_sl2(k)", "SL_2 on root k", "product-of-SL_2 theorem; torus-translate theorem"),
        ("one_param_unipotent(i,j)", "{1 + t E_ij}", "SL_3 case tree (center of N and N_beta cases)"),
        ("trivial", "{1}", "SL_3 case tree; product-of-SL_2 theorem"),
        ("whole", "G", "containment and delta queries only"),
        ("product[k1, ...]", "one kind per SL_2 factor", "product-of-SL_2 theorem (sl2, unipotent, trivial)"),
    ];
    let mut s = String::from("subgroup catalog\n");
    for (k, g, cov) in rows {
        let _ = writeln!(s, "  {k:<28} {g:<26} {cov}");
    }
    s.push_str("\nSL_3 case coverage (alpha-escape normal form; the a1-escape form maps through the outer automorphism)\n");
    let cases: [(&str, &str, &str); 9] = [
        ("Case 1", "H not in N_beta, beta(b_n) -> inf, c finite", "P_beta"),
        ("Case 2.1", "H in N_beta, c in (0, inf)", "P_beta"),
        ("Case 2.2.1", "H in N_beta, c = 0, s_n in N_beta", "P_empty"),
        ("Case 2.2.2.1", "reduced v_n bounded", "P_beta"),
        ("Case 2.2.2.2.1", "v_n -> inf, beta(c_n alpha_n) -> inf", "P_empty"),
        ("Case 2.2.2.2.2", "v_n -> inf, beta(c_n alpha_n) -> d > 0", "P_alpha"),
        ("Case 2.2.2.2.3.1", "beta(c_n alpha_n) -> 0, H not in the center", "P_alpha"),
        ("Case 2.2.2.2.3.2", "beta(c_n alpha_n) -> 0, H in the center", "Dirac point (P from data)"),
        ("alpha(b_n a_n) -> inf", "beta(b_n) -> inf", "P_empty"),
    ];
    for (c, cond, p) in cases {
        let _ = writeln!(s, "  {c:<22} {cond:<46} {p}");
    }
    s.push_str("\nlabels: P_beta = {a2}, P_alpha = {a1}, P_empty = {}, interior = {a1,a2}\n");
    s
}
