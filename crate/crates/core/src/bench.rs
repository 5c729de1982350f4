//! Experiment harness: metrics, config matrices over instance suites, CSV
//! reports and SVG Gantt charts.
//!
//! # CSV files
//!
//! `rows.csv` has one row per (instance, config): `instance, jobs,
//! families, machines, config, status, objective, lower_bound, nodes,
//! elapsed_ms, trace, trace_file, error`. `trace` is `ms:objective` pairs
//! joined by `;`. Aggregates are computed from these rows alone:
//!
//! * `gaps.csv`: `jobs, families, machines, config, n, missing, mean_gap,
//!   ci95` where the gap is against the best objective any config reached
//!   on the instance and `ci95` is the half-width of a normal interval.
//! * `pairwise.csv`: `jobs, families, machines, config_a, config_b, n,
//!   better, equal, worse, pct_better, pct_equal, pct_worse` comparing final
//!   objectives of `config_a` against `config_b`.
//! * `improvement.csv`: `config_a, config_b, t_ms, n, coverage,
//!   mean_improvement`, the mean of `improvement_pct(a@t, b@t)` over the
//!   instances where both have an incumbent at `t`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::schedule::Schedule;
use crate::solver::{solve, ModelVariant, SolverConfig};
use crate::variation::VariationConfig;
use crate::{Instance, Time};

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("no incumbent at the sampled time")]
    NoIncumbent,
}

/// `|model - best| / model`. Both zero gives zero.
pub fn relative_gap<S: Scalar>(twct_model: Time, twct_best: Time) -> Result<S, MetricError> {
    if twct_model == 0 {
        return if twct_best == 0 {
            Ok(S::zero())
        } else {
            Err(MetricError::DivisionByZero)
        };
    }
    Ok(S::from_int((twct_model - twct_best).abs()) / S::from_int(twct_model.abs()))
}

/// `(base - other) / base`: positive when `other` is better.
pub fn improvement_pct<S: Scalar>(base: Option<Time>, other: Option<Time>) -> Result<S, MetricError> {
    let (Some(base), Some(other)) = (base, other) else {
        return Err(MetricError::NoIncumbent);
    };
    if base == 0 {
        return Err(MetricError::DivisionByZero);
    }
    Ok(S::from_int(base - other) / S::from_int(base))
}

/// Incumbent at `t_ms` of a step-function trace given as `(ms, objective)`
/// pairs in time order.
pub fn sample_trace(trace: &[(u64, Time)], t_ms: u64) -> Option<Time> {
    trace.iter().take_while(|(ms, _)| *ms <= t_ms).last().map(|&(_, o)| o)
}

/// A named solver configuration.
///
/// Names are `model-VAR[-sb][-sbt][-core]`, e.g. `ia-IPF` or `h-BPC-sb-sbt`,
/// where `VAR` is a variation code and `core` disables batch sizing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub name: String,
    pub solver: SolverConfig,
}

impl FromStr for BenchConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('-');
        let model: ModelVariant = parts.next().unwrap_or_default().parse()?;
        let variation: VariationConfig = parts
            .next()
            .ok_or_else(|| format!("config `{s}` lacks a variation"))?
            .parse()?;
        let mut solver = SolverConfig {
            model_variant: model,
            variation,
            ..SolverConfig::default()
        };
        for flag in parts {
            match flag {
                "sb" => solver.sb = true,
                "sbt" => solver.sbt = true,
                "core" => solver.sizing_enabled = false,
                other => return Err(format!("unknown flag `{other}` in config `{s}`")),
            }
        }
        Ok(Self {
            name: s.to_string(),
            solver,
        })
    }
}

mod trace_col {
    use super::Time;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &[(u64, Time)], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<String> = t.iter().map(|(ms, o)| format!("{ms}:{o}")).collect();
        s.serialize_str(&text.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(u64, Time)>, D::Error> {
        let text = String::deserialize(d)?;
        text.split(';')
            .filter(|p| !p.is_empty())
            .map(|p| {
                let (ms, o) = p.split_once(':').ok_or_else(|| serde::de::Error::custom("bad trace point"))?;
                Ok((
                    ms.parse().map_err(serde::de::Error::custom)?,
                    o.parse().map_err(serde::de::Error::custom)?,
                ))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance: String,
    pub jobs: usize,
    pub families: usize,
    pub machines: usize,
    pub config: String,
    /// Solver status, or `error`.
    pub status: String,
    pub objective: Option<Time>,
    pub lower_bound: Option<Time>,
    pub nodes: u64,
    pub elapsed_ms: u64,
    #[serde(with = "trace_col")]
    pub trace: Vec<(u64, Time)>,
    pub trace_file: String,
    pub error: Option<String>,
}

impl RunRow {
    fn class(&self) -> (usize, usize, usize) {
        (self.jobs, self.families, self.machines)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub jobs: usize,
    pub families: usize,
    pub machines: usize,
    pub config: String,
    pub n: usize,
    pub missing: usize,
    pub mean_gap: f64,
    pub ci95: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub jobs: usize,
    pub families: usize,
    pub machines: usize,
    pub config_a: String,
    pub config_b: String,
    pub n: usize,
    pub better: usize,
    pub equal: usize,
    pub worse: usize,
    pub pct_better: f64,
    pub pct_equal: f64,
    pub pct_worse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub config_a: String,
    pub config_b: String,
    pub t_ms: u64,
    pub n: usize,
    pub coverage: usize,
    pub mean_improvement: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Aggregates {
    pub gaps: Vec<GapRow>,
    pub pairs: Vec<PairRow>,
    pub curve: Vec<CurveRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<RunRow>,
    pub aggregates: Aggregates,
}

const Z95: f64 = 1.959_963_984_540_054;

fn mean_ci(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Config names in first-appearance order.
fn config_order(rows: &[RunRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.config) {
            out.push(r.config.clone());
        }
    }
    out
}

/// Computes every aggregate from raw rows. Improvement samples are taken
/// every `sample` up to `horizon`.
pub fn aggregate(rows: &[RunRow], sample: Duration, horizon: Duration) -> Aggregates {
    let configs = config_order(rows);
    let mut by_instance: BTreeMap<&str, BTreeMap<&str, &RunRow>> = BTreeMap::new();
    for r in rows {
        by_instance.entry(&r.instance).or_default().insert(&r.config, r);
    }
    let mut classes: BTreeMap<(usize, usize, usize), Vec<&str>> = BTreeMap::new();
    for r in rows {
        let list = classes.entry(r.class()).or_default();
        if !list.contains(&r.instance.as_str()) {
            list.push(&r.instance);
        }
    }
    let best: BTreeMap<&str, Option<Time>> = by_instance
        .iter()
        .map(|(i, m)| (*i, m.values().filter_map(|r| r.objective).min()))
        .collect();

    let mut gaps = Vec::new();
    let mut pairs = Vec::new();
    for (&(jobs, families, machines), instances) in &classes {
        for c in &configs {
            let mut xs = Vec::new();
            let mut missing = 0;
            for i in instances {
                let row = by_instance[i].get(c.as_str());
                match (row.and_then(|r| r.objective), best[i]) {
                    (Some(o), Some(b)) => xs.push(relative_gap::<f64>(o, b).unwrap_or(0.0)),
                    _ => missing += 1,
                }
            }
            let (mean_gap, ci95) = mean_ci(&xs);
            gaps.push(GapRow {
                jobs,
                families,
                machines,
                config: c.clone(),
                n: xs.len(),
                missing,
                mean_gap,
                ci95,
            });
        }
        for (ai, a) in configs.iter().enumerate() {
            for b in &configs[ai + 1..] {
                let (mut better, mut equal, mut worse) = (0, 0, 0);
                for i in instances {
                    let get = |c: &str| by_instance[i].get(c).and_then(|r| r.objective);
                    if let (Some(x), Some(y)) = (get(a), get(b)) {
                        match x.cmp(&y) {
                            std::cmp::Ordering::Less => better += 1,
                            std::cmp::Ordering::Equal => equal += 1,
                            std::cmp::Ordering::Greater => worse += 1,
                        }
                    }
                }
                let n = better + equal + worse;
                let pct = |k: usize| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 };
                pairs.push(PairRow {
                    jobs,
                    families,
                    machines,
                    config_a: a.clone(),
                    config_b: b.clone(),
                    n,
                    better,
                    equal,
                    worse,
                    pct_better: pct(better),
                    pct_equal: pct(equal),
                    pct_worse: pct(worse),
                });
            }
        }
    }

    let mut curve = Vec::new();
    let step = sample.as_millis().max(1) as u64;
    let steps = (horizon.as_millis() as u64).div_ceil(step);
    for (ai, a) in configs.iter().enumerate() {
        for b in &configs[ai + 1..] {
            for k in 1..=steps {
                let t = k * step;
                let mut xs = Vec::new();
                let mut n = 0;
                for m in by_instance.values() {
                    let (Some(ra), Some(rb)) = (m.get(a.as_str()), m.get(b.as_str())) else {
                        continue;
                    };
                    n += 1;
                    if let Ok(v) = improvement_pct::<f64>(sample_trace(&ra.trace, t), sample_trace(&rb.trace, t)) {
                        xs.push(v);
                    }
                }
                curve.push(CurveRow {
                    config_a: a.clone(),
                    config_b: b.clone(),
                    t_ms: t,
                    n,
                    coverage: xs.len(),
                    mean_improvement: mean_ci(&xs).0,
                });
            }
        }
    }
    Aggregates { gaps, pairs, curve }
}

fn trace_file_name(instance: &str, config: &str) -> String {
    let stem = instance.strip_suffix(".json").unwrap_or(instance);
    format!("traces/{stem}__{config}.json")
}

/// Runs every config on every instance with `budget` per run, at most
/// `workers` runs at a time. Failed runs become `error` rows.
pub fn run_matrix(suite: &[(String, Instance)], configs: &[BenchConfig], budget: Duration, workers: usize) -> Vec<RunRow> {
    let tasks: Vec<(&String, &Instance, &BenchConfig)> = suite
        .iter()
        .flat_map(|(name, inst)| configs.iter().map(move |c| (name, inst, c)))
        .collect();
    let run = |&(name, inst, cfg): &(&String, &Instance, &BenchConfig)| {
        let solver = SolverConfig {
            time_limit: budget,
            ..cfg.solver.clone()
        };
        let mut row = RunRow {
            instance: name.clone(),
            jobs: inst.num_jobs(),
            families: inst.num_families,
            machines: inst.num_machines,
            config: cfg.name.clone(),
            status: "error".into(),
            objective: None,
            lower_bound: None,
            nodes: 0,
            elapsed_ms: 0,
            trace: Vec::new(),
            trace_file: trace_file_name(name, &cfg.name),
            error: None,
        };
        match solve(inst, &solver) {
            Ok(res) => {
                row.status = res.status.to_string();
                row.objective = res.objective;
                row.lower_bound = Some(res.lower_bound);
                row.nodes = res.nodes;
                row.elapsed_ms = res.elapsed.as_millis() as u64;
                row.trace = res
                    .trace
                    .iter()
                    .map(|p| (p.elapsed.as_millis() as u64, p.objective))
                    .collect();
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(|| tasks.par_iter().map(run).collect()),
        Err(_) => tasks.iter().map(run).collect(),
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// Writes the four CSV files and one trace JSON per row into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir.join("traces"))?;
    std::fs::write(dir.join("rows.csv"), to_csv(&report.rows))?;
    std::fs::write(dir.join("gaps.csv"), to_csv(&report.aggregates.gaps))?;
    std::fs::write(dir.join("pairwise.csv"), to_csv(&report.aggregates.pairs))?;
    std::fs::write(dir.join("improvement.csv"), to_csv(&report.aggregates.curve))?;
    for r in &report.rows {
        let points: Vec<serde_json::Value> = r
            .trace
            .iter()
            .map(|(ms, o)| serde_json::json!({ "ms": ms, "obj": o }))
            .collect();
        std::fs::write(dir.join(&r.trace_file), serde_json::Value::Array(points).to_string())?;
    }
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#edc948", "#76b7b2", "#ff9da7",
];

/// One lane per machine with family-coloured job boxes, batch outlines,
/// hatched setups and green release markers.
pub fn gantt_svg(inst: &Instance, sched: &Schedule) -> String {
    const UNIT: i64 = 20;
    const LANE: i64 = 50;
    const LEFT: i64 = 40;
    const TOP: i64 = 10;
    let lanes = sched.machines.len().max(1) as i64;
    let horizon = sched
        .batches()
        .map(|(_, b)| b.end)
        .chain(inst.jobs.iter().map(|j| j.release))
        .max()
        .unwrap_or(0)
        + 1;
    let width = LEFT + horizon * UNIT + 10;
    let height = TOP + lanes * LANE + 20;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    s.push_str(r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="#888" stroke-width="2"/></pattern></defs>"##);
    s.push('\n');
    let x = |t: Time| LEFT + t * UNIT;
    for (m, batches) in sched.machines.iter().enumerate() {
        let y = TOP + m as i64 * LANE;
        let _ = writeln!(s, r#"<g class="lane" id="m{m}">"#);
        let _ = writeln!(s, r#"<text x="4" y="{}">M{}</text>"#, y + 25, m + 1);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="#ccc"/>"##,
            y + 40,
            width - 10
        );
        let mut prev: Option<(usize, Time)> = None;
        for b in batches {
            let tau = inst.setups.before(prev.map(|p| p.0), b.family);
            if tau > 0 {
                let from = prev.map_or(b.start - tau, |p| p.1.max(b.start - tau));
                let _ = writeln!(
                    s,
                    r##"<rect class="setup" x="{}" y="{}" width="{}" height="30" fill="url(#hatch)" stroke="#888"/>"##,
                    x(from),
                    y + 10,
                    tau * UNIT
                );
            }
            let color = PALETTE[b.family % PALETTE.len()];
            for tj in &b.jobs {
                let Some(j) = inst.index_of(tj.id) else { continue };
                let job = &inst.jobs[j];
                let _ = writeln!(
                    s,
                    r##"<rect class="job" x="{}" y="{}" width="{}" height="30" fill="{color}" stroke="#fff"/>"##,
                    x(tj.start),
                    y + 10,
                    job.processing * UNIT
                );
                let _ = writeln!(
                    s,
                    r##"<text x="{}" y="{}" fill="#fff">{}</text>"##,
                    x(tj.start) + 3,
                    y + 29,
                    tj.id
                );
                let _ = writeln!(
                    s,
                    r##"<line class="release" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#2ca02c" stroke-width="2"/>"##,
                    x(job.release),
                    y + 4,
                    y + 44
                );
            }
            let _ = writeln!(
                s,
                r##"<rect class="batch" x="{}" y="{}" width="{}" height="34" fill="none" stroke="#000"/>"##,
                x(b.start),
                y + 8,
                (b.end - b.start) * UNIT
            );
            prev = Some((b.family, b.end));
        }
        s.push_str("</g>\n");
    }
    let y = TOP + lanes * LANE;
    for t in (0..=horizon).step_by(5) {
        let _ = writeln!(s, r#"<text x="{}" y="{}">{t}</text>"#, x(t) - 3, y + 12);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{figure4_schedule, table1};
    use crate::Rational;

    #[test]
    fn metric_examples() {
        assert_eq!(relative_gap::<Rational>(110, 100), Ok(Rational::new(1, 11)));
        assert_eq!(relative_gap::<Rational>(100, 100), Ok(Rational::from_int(0)));
        assert_eq!(relative_gap::<Rational>(0, 0), Ok(Rational::from_int(0)));
        assert_eq!(relative_gap::<Rational>(0, 3), Err(MetricError::DivisionByZero));
        assert_eq!(improvement_pct::<Rational>(Some(100), Some(90)), Ok(Rational::new(1, 10)));
        assert_eq!(improvement_pct::<Rational>(Some(90), Some(100)), Ok(Rational::new(-1, 9)));
        assert_eq!(improvement_pct::<Rational>(Some(7), Some(7)), Ok(Rational::from_int(0)));
        assert_eq!(improvement_pct::<Rational>(None, Some(7)), Err(MetricError::NoIncumbent));
    }

    #[test]
    fn trace_is_a_step_function() {
        let t = [(5, 100), (20, 90)];
        assert_eq!(sample_trace(&t, 4), None);
        assert_eq!(sample_trace(&t, 5), Some(100));
        assert_eq!(sample_trace(&t, 19), Some(100));
        assert_eq!(sample_trace(&t, 10_000), Some(90));
    }

    #[test]
    fn config_names() {
        let c: BenchConfig = "h-BPC-sb-sbt".parse().unwrap();
        assert_eq!(c.solver.model_variant, ModelVariant::H);
        assert!(c.solver.variation.is_bc() && c.solver.sb && c.solver.sbt);
        let c: BenchConfig = "ia-IPF-core".parse().unwrap();
        assert!(!c.solver.sizing_enabled);
        assert!("ia".parse::<BenchConfig>().is_err());
        assert!("ia-IPF-fast".parse::<BenchConfig>().is_err());
    }

    fn row(instance: &str, config: &str, objective: Option<Time>) -> RunRow {
        RunRow {
            instance: instance.into(),
            jobs: 5,
            families: 2,
            machines: 1,
            config: config.into(),
            status: "optimal".into(),
            objective,
            lower_bound: objective,
            nodes: 1,
            elapsed_ms: 1,
            trace: objective.map(|o| vec![(0, o + 3), (400, o)]).unwrap_or_default(),
            trace_file: trace_file_name(instance, config),
            error: None,
        }
    }

    #[test]
    fn identical_configs_are_all_equal() {
        let rows: Vec<RunRow> = (0..4)
            .flat_map(|i| ["a", "b"].map(|c| row(&format!("i{i}"), c, Some(50 + i))))
            .collect();
        let agg = aggregate(&rows, Duration::from_secs(1), Duration::from_secs(2));
        assert_eq!(agg.pairs.len(), 1);
        assert_eq!(agg.pairs[0].pct_equal, 100.0);
        assert!(agg.gaps.iter().all(|g| g.mean_gap == 0.0 && g.ci95 == 0.0));
        assert_eq!(agg.curve.len(), 2);
        assert_eq!(agg.curve[0].coverage, 4);
    }

    #[test]
    fn aggregates_recompute_from_csv() {
        let rows = vec![
            row("i0", "a", Some(110)),
            row("i0", "b", Some(100)),
            row("i1", "a", Some(40)),
            row("i1", "b", None),
        ];
        let agg = aggregate(&rows, Duration::from_millis(200), Duration::from_secs(1));
        assert_eq!(agg.gaps[0].n, 2);
        assert_eq!(agg.gaps[1].missing, 1);
        assert_eq!(agg.pairs[0].worse, 1);
        let back: Vec<RunRow> = from_csv(&to_csv(&rows)).unwrap();
        assert_eq!(back, rows);
        let again = aggregate(&back, Duration::from_millis(200), Duration::from_secs(1));
        assert_eq!(to_csv(&again.gaps), to_csv(&agg.gaps));
        let gaps: Vec<GapRow> = from_csv(&to_csv(&agg.gaps)).unwrap();
        assert_eq!(gaps, agg.gaps);
    }

    #[test]
    fn matrix_on_table1() {
        let suite = vec![("t1.json".to_string(), table1())];
        let configs: Vec<BenchConfig> = ["ia-IPF", "g-IPF", "h-IPF-sb"].iter().map(|c| c.parse().unwrap()).collect();
        let rows = run_matrix(&suite, &configs, Duration::from_secs(5), 2);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.objective == Some(61)));
        let agg = aggregate(&rows, Duration::from_secs(1), Duration::from_secs(1));
        assert!(agg.gaps.iter().all(|g| g.mean_gap == 0.0));
    }

    #[test]
    fn gantt_of_figure4() {
        let inst = table1();
        let svg = gantt_svg(&inst, &figure4_schedule(&inst));
        assert_eq!(svg.matches(r#"class="job""#).count(), 5);
        assert_eq!(svg.matches(r#"class="batch""#).count(), 2);
        assert_eq!(svg.matches(r#"class="release""#).count(), 5);
        assert_eq!(svg, gantt_svg(&inst, &figure4_schedule(&inst)));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn gantt_with_an_empty_machine() {
        let inst = table1();
        let mut sched = figure4_schedule(&inst);
        sched.machines.push(Vec::new());
        let svg = gantt_svg(&inst, &sched);
        assert_eq!(svg.matches(r#"class="lane""#).count(), 2);
        assert!(svg.contains(r#"id="m1""#));
    }
}
