use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, Context};
use feelab::causal::{
    ate_report, build_design, logit_fit, ols_fit_with, relative_risk_reduction, render_json, render_text, ColumnSpec,
    Covariance, Fit, Outcome,
};
use feelab::demand::{empirical_demand_curve, Scenario};
use feelab::experiment::{compare, initial_equilibrium, run_one, summarize_run, RunSummary, SweepSpec};
use feelab::forecast::{fit_ts, predict_components, read_daily_series, write_components_csv, HolidaySpec, TsConfig};
use feelab::ingest::{join_panel, load_blocks, load_delays, load_sanctions, load_txs, LoadMode, Reject};
use feelab::metrics::{
    congestion_by_cut, daily_ratios, panel_from_trace, read_panel_csv, summarize_panel, write_daily_csv,
    write_panel_csv, PanelOptions, MERGE_BLOCK,
};
use feelab::sim::{export_trace, IntervalRegime, SimConfig};
use feelab::tfm::{equilibrium_base_fee, BlockInterval, FeeParams};
use feelab::txgraph::{build_graph, graph_summary, write_edges_csv, write_flows_csv, EraFilter};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::manifest::{self, ManifestBuilder};
use crate::{
    EquilibriumArgs, ForecastArgs, GraphArgs, IngestArgs, MetricsArgs, RddArgs, SimulateArgs, SweepArgs, VerifyArgs,
};

/// A failed command, classified for the exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Input(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Input(e) | Failure::Numerical(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn lib<E: Into<feelab::Error>>(e: E) -> Failure {
    let e = e.into();
    if e.is_numerical() {
        Failure::Numerical(e.into())
    } else {
        Failure::Input(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

type CmdResult = Result<(), Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn prepare(out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))
}

pub fn parse_regime(s: &str) -> Result<IntervalRegime, Failure> {
    let bad = || usage(format!("bad regime `{s}`; expected pre, post, exp:MEAN or fixed:SLOT[:EMPTY_PROB]"));
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let regime = match parts.as_slice() {
        ["pre"] => IntervalRegime::pre_merge(),
        ["post"] => IntervalRegime::post_merge(),
        ["exp", m] => IntervalRegime::Exponential { mean_seconds: num(m)? },
        ["fixed", slot] => IntervalRegime::Fixed {
            slot_seconds: num(slot)?,
            empty_slot_prob: 0.0,
        },
        ["fixed", slot, p] => IntervalRegime::Fixed {
            slot_seconds: num(slot)?,
            empty_slot_prob: num(p)?,
        },
        _ => return Err(bad()),
    };
    regime.validate().map_err(|e| usage(e.to_string()))?;
    Ok(regime)
}

/// `1,2,5` or `1..20` (inclusive).
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, Failure> {
    let bad = || usage(format!("bad seed list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    seed: Option<u64>,
    regime: Option<IntervalRegime>,
    horizon: Option<f64>,
    blocks: Option<usize>,
    initial_base_fee: Option<u64>,
    max_tip: Option<f64>,
    gas_target: Option<u64>,
    start_block: Option<u64>,
    cutoff: Option<u64>,
}

pub fn simulate(a: &SimulateArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("simulate", args);
    let mut cfg: SimulateConfig = match &a.config {
        Some(p) => {
            m.config(p);
            read_json(p)?
        }
        None => SimulateConfig::default(),
    };
    m.input(&a.scenario);
    let scenario: Scenario = read_json(&a.scenario)?;
    scenario.validate().map_err(lib)?;

    if let Some(r) = &a.regime {
        cfg.regime = Some(parse_regime(r)?);
    }
    cfg.seed = a.seed.or(cfg.seed);
    cfg.horizon = a.horizon.or(cfg.horizon);
    cfg.blocks = a.blocks.or(cfg.blocks);
    cfg.initial_base_fee = a.initial_base_fee.or(cfg.initial_base_fee);
    cfg.max_tip = a.max_tip.or(cfg.max_tip);
    cfg.gas_target = a.gas_target.or(cfg.gas_target);
    cfg.start_block = a.start_block.or(cfg.start_block);
    cfg.cutoff = a.cutoff.or(cfg.cutoff);

    let seed = cfg.seed.ok_or_else(|| usage("a seed is required (--seed or `seed` in the config)"))?;
    let regime = cfg.regime.unwrap_or_else(IntervalRegime::post_merge);
    regime.validate().map_err(|e| usage(e.to_string()))?;
    let horizon = match (cfg.horizon, cfg.blocks) {
        (Some(h), _) => h,
        // generous enough that the block count, not time, ends the run
        (None, Some(n)) => (n as f64 + 10.0) * regime.mean() * 10.0,
        (None, None) => return Err(usage("give --horizon or --blocks")),
    };
    let gas_target = cfg.gas_target.unwrap_or(15_000_000);
    let initial = match cfg.initial_base_fee {
        Some(b) => b,
        None => {
            let b = initial_equilibrium(&scenario, regime.mean(), gas_target)
                .map_err(|e| Failure::Numerical(anyhow!("{e}; pass --initial-base-fee")))?;
            b.value().round().max(1.0) as u64
        }
    };
    let mut config = SimConfig::new(regime, initial, horizon, seed);
    config.fee = FeeParams::with_target(gas_target);
    if let Some(t) = cfg.max_tip {
        config.max_tip = t;
    }
    if let Some(b) = cfg.start_block {
        config.start_block = b;
    }
    m.seeds(&[seed]);

    let mut trace = feelab::experiment::simulate(&scenario, &config).map_err(lib)?;
    if let Some(n) = cfg.blocks {
        truncate_trace(&mut trace, n);
    }

    prepare(out_dir)?;
    let files = export_trace(&trace, out_dir).map_err(lib)?;
    let cutoff = cfg.cutoff.unwrap_or(MERGE_BLOCK);
    let panel = panel_from_trace(&trace, cutoff).map_err(lib)?;
    write_panel_csv(&panel, create(&out_dir.join("panel.csv"))?).map_err(lib)?;
    let summary = summarize_run(&trace, &panel).map_err(lib)?;
    write_json(&out_dir.join("summary.json"), &summary)?;

    let mut artifacts: Vec<String> = files.all().iter().map(|p| file_name(p)).collect();
    artifacts.extend(["panel.csv".to_string(), "summary.json".to_string()]);
    let names: Vec<&str> = artifacts.iter().map(String::as_str).collect();
    m.write(out_dir, &names)?;
    println!(
        "{} blocks, {} transactions ({} pending) under {}; final base fee {} wei",
        trace.blocks.len(),
        trace.transactions.len(),
        summary.pending_at_end,
        regime.label(),
        summary.final_base_fee
    );
    Ok(())
}

/// Keeps the first `n` blocks and the transactions submitted before the last
/// of them.
fn truncate_trace(trace: &mut feelab::sim::SimTrace, n: usize) {
    if trace.blocks.len() <= n {
        return;
    }
    trace.blocks.truncate(n);
    let Some(last) = trace.blocks.last() else {
        trace.transactions.clear();
        return;
    };
    let (end, last_number) = (trace.block_time(last), last.number);
    trace.transactions.retain(|t| t.submit_time <= end);
    for t in &mut trace.transactions {
        if t.mined_block.is_some_and(|b| b > last_number) {
            t.mined_block = None;
            t.mined_time = None;
        }
    }
}

fn mode(lenient: bool) -> LoadMode {
    if lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    }
}

fn write_rejects(path: &Path, rejects: &[(&str, &Reject)]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["file", "line", "reason"])?;
    for (file, r) in rejects {
        w.write_record([file.to_string(), r.line.to_string(), r.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn ingest(a: &IngestArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("ingest", args);
    for p in [&a.blocks, &a.txs, &a.delays, &a.sanctions] {
        m.input(p);
    }
    let mode = mode(a.lenient);
    let blocks = load_blocks(&a.blocks, mode).map_err(lib)?;
    let txs = load_txs(&a.txs, mode).map_err(lib)?;
    let delays = load_delays(&a.delays, mode).map_err(lib)?;
    let (sanctions, sanction_rejects) = load_sanctions(&a.sanctions, mode).map_err(lib)?;

    let mut opts = PanelOptions::new(a.first_interval);
    opts.cutoff = a.cutoff;
    opts.cut = a.cut;
    opts.run_length = a.run_length;
    let (panel, report) =
        join_panel(&blocks.records, &txs.records, &delays.records, &sanctions, &opts).map_err(lib)?;

    prepare(out_dir)?;
    write_panel_csv(&panel, create(&out_dir.join("panel.csv"))?).map_err(lib)?;
    write_json(&out_dir.join("join_report.json"), &report)?;
    let rejects: Vec<(&str, &Reject)> = [
        ("blocks", &blocks.rejects),
        ("transactions", &txs.rejects),
        ("delays", &delays.rejects),
        ("sanctions", &sanction_rejects),
    ]
    .into_iter()
    .flat_map(|(f, rs)| rs.iter().map(move |r| (f, r)))
    .collect();
    write_rejects(&out_dir.join("rejects.csv"), &rejects)?;
    m.write(out_dir, &["panel.csv", "join_report.json", "rejects.csv"])?;

    println!(
        "{} blocks, {} transactions, {} observed / {} unobserved delays, {} sanctioned, {} rejected rows",
        report.blocks,
        report.transactions,
        report.observed,
        report.unobserved,
        report.sanctioned,
        rejects.len()
    );
    Ok(())
}

fn load_panel(path: &Path) -> Result<Vec<feelab::metrics::PanelRow>, Failure> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_panel_csv(f).map_err(lib)
}

pub fn metrics(a: &MetricsArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("metrics", args);
    m.input(&a.panel);
    let panel = load_panel(&a.panel)?;
    let summary = summarize_panel(&panel).map_err(lib)?;
    let daily = daily_ratios(&panel).map_err(lib)?;
    let cuts: Vec<f64> = if a.cuts.is_empty() {
        (50..=99).map(|c| c as f64 / 100.0).collect()
    } else {
        a.cuts.clone()
    };
    let usage_pairs: Vec<(u64, u64)> = panel.iter().map(|r| (r.gas_used, r.gas_limit)).collect();
    let curve = congestion_by_cut(&usage_pairs, &cuts).map_err(lib)?;

    prepare(out_dir)?;
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_daily_csv(&daily, create(&out_dir.join("daily.csv"))?).map_err(lib)?;
    let mut w = csv::Writer::from_writer(create(&out_dir.join("congestion_by_cut.csv"))?);
    w.write_record(["cut", "congestion_ratio"]).context("write congestion_by_cut.csv")?;
    for (cut, ratio) in &curve {
        w.write_record([cut.to_string(), ratio.to_string()])
            .context("write congestion_by_cut.csv")?;
    }
    w.flush().context("write congestion_by_cut.csv")?;
    drop(w);
    m.write(out_dir, &["summary.json", "daily.csv", "congestion_by_cut.csv"])?;
    println!("{}", serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?);
    Ok(())
}

/// The line printed under a table: the treatment effect for OLS, the odds
/// reduction for logit. Uses the fullest spec.
fn effect_line(outcome: Outcome, fit: &Fit) -> Result<(String, Value), Failure> {
    match fit {
        Fit::Ols(o) => {
            let ate = ate_report(o, outcome).map_err(lib)?;
            Ok((ate.to_string(), json!({ "ate": ate })))
        }
        Fit::Logit(l) => {
            let coef = l.coef("merged").ok_or_else(|| anyhow!("fit has no `merged` coefficient"))?;
            let rrr = relative_risk_reduction(coef);
            Ok((
                format!("{}: relative risk reduction {:.2}%", outcome, 100.0 * rrr),
                json!({ "relative_risk_reduction": rrr }),
            ))
        }
    }
}

pub fn rdd(a: &RddArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("rdd", args);
    m.input(&a.panel);
    let outcomes: Vec<Outcome> = if a.outcome.is_empty() {
        Outcome::ALL.to_vec()
    } else {
        a.outcome
            .iter()
            .map(|o| Outcome::from_name(o).map_err(|e| usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let specs: Vec<ColumnSpec> = match &a.spec {
        None => ColumnSpec::ALL.to_vec(),
        Some(s) => vec![ColumnSpec::parse(s).map_err(|e| usage(e.to_string()))?],
    };
    let covariance = match a.covariance.as_str() {
        "classical" => Covariance::Classical,
        "hc1" => Covariance::Hc1,
        other => return Err(usage(format!("unknown covariance `{other}`"))),
    };
    let force_logit = match a.family.as_str() {
        "auto" => None,
        "ols" => Some(false),
        "logit" => Some(true),
        other => return Err(usage(format!("unknown family `{other}`"))),
    };
    let panel = load_panel(&a.panel)?;

    prepare(out_dir)?;
    let mut artifacts = Vec::new();
    let mut all_text = String::new();
    for outcome in outcomes {
        let logit = force_logit.unwrap_or(outcome.is_binary());
        let fits = specs
            .iter()
            .map(|&spec| {
                let d = build_design(&panel, outcome, spec)?;
                if logit {
                    logit_fit(&d).map(Fit::Logit)
                } else {
                    ols_fit_with(&d, covariance).map(Fit::Ols)
                }
            })
            .collect::<Result<Vec<Fit>, _>>()
            .map_err(lib)?;
        let (line, extra) = effect_line(outcome, fits.last().expect("at least one spec"))?;
        let mut text = render_text(outcome.name(), &fits);
        if !text.ends_with('\n') {
            text.push('\n');
        }
        let _ = writeln!(text, "{line}");
        let mut value = render_json(outcome.name(), &fits);
        if let (Some(obj), Value::Object(extra)) = (value.as_object_mut(), extra) {
            obj.extend(extra);
        }
        let (txt, js) = (format!("rdd_{outcome}.txt"), format!("rdd_{outcome}.json"));
        fs::write(out_dir.join(&txt), &text).with_context(|| format!("cannot write {txt}"))?;
        write_json(&out_dir.join(&js), &value)?;
        artifacts.extend([txt, js]);
        all_text.push_str(&text);
        all_text.push('\n');
    }
    let names: Vec<&str> = artifacts.iter().map(String::as_str).collect();
    m.write(out_dir, &names)?;
    print!("{all_text}");
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TsOverrides {
    fourier_order: Option<usize>,
    n_changepoints: Option<usize>,
    changepoint_range: Option<f64>,
    lambda: Option<f64>,
}

pub fn forecast(a: &ForecastArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("forecast", args);
    m.input(&a.series);
    let mut o: TsOverrides = match &a.config {
        Some(p) => {
            m.config(p);
            read_json(p)?
        }
        None => TsOverrides::default(),
    };
    o.fourier_order = a.fourier_order.or(o.fourier_order);
    o.n_changepoints = a.changepoints.or(o.n_changepoints);
    o.changepoint_range = a.changepoint_range.or(o.changepoint_range);
    o.lambda = a.lambda.or(o.lambda);
    let d = TsConfig::default();
    let config = TsConfig {
        fourier_order: o.fourier_order.unwrap_or(d.fourier_order),
        n_changepoints: o.n_changepoints.unwrap_or(d.n_changepoints),
        changepoint_range: o.changepoint_range.unwrap_or(d.changepoint_range),
        lambda: o.lambda.unwrap_or(d.lambda),
    };
    let holidays = match &a.holidays {
        Some(p) => {
            m.input(p);
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            HolidaySpec::from_json(&text).map_err(lib)?
        }
        None => HolidaySpec::default(),
    };
    let f = File::open(&a.series).with_context(|| format!("cannot open {}", a.series.display()))?;
    let (dates, values) = read_daily_series(f, &a.column).map_err(lib)?;
    let model = fit_ts(&dates, &values, &holidays, &config).map_err(lib)?;
    let comps = predict_components(&model, &dates);

    prepare(out_dir)?;
    write_components_csv(&comps, create(&out_dir.join("components.csv"))?).map_err(lib)?;
    write_json(&out_dir.join("model.json"), &model)?;
    m.write(out_dir, &["components.csv", "model.json"])?;

    println!(
        "{} days, {} to {}; average slope {:.4}/day, residual sd {:.4}",
        dates.len(),
        model.start,
        model.end,
        model.average_slope(),
        model.residual_std
    );
    for h in &model.holiday_effects {
        if h.in_window {
            println!("  {}: {:+.4} (se {:.4})", h.name, h.effect, h.std_error);
        } else {
            println!("  {}: outside the series", h.name);
        }
    }
    Ok(())
}

pub fn graph(a: &GraphArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("graph", args);
    m.input(&a.txs).input(&a.sanctions);
    let filter = match a.era.as_str() {
        "pre" => EraFilter::Pre,
        "post" => EraFilter::Post,
        "all" => EraFilter::All,
        other => return Err(usage(format!("unknown era `{other}`"))),
    };
    let mode = mode(a.lenient);
    let txs = load_txs(&a.txs, mode).map_err(lib)?;
    let (sanctions, _) = load_sanctions(&a.sanctions, mode).map_err(lib)?;
    let g = build_graph(&txs.records, &sanctions, filter, a.cutoff);
    let summary = graph_summary(&g);

    prepare(out_dir)?;
    write_json(&out_dir.join("graph_summary.json"), &summary)?;
    write_edges_csv(&g, create(&out_dir.join("edges.csv"))?).map_err(lib)?;
    write_flows_csv(&g, create(&out_dir.join("flows.csv"))?).map_err(lib)?;
    m.write(out_dir, &["graph_summary.json", "edges.csv", "flows.csv"])?;

    println!(
        "{} nodes, {} edges, {} components (largest {}), {} self-loops",
        summary.nodes, summary.edges, summary.components, summary.largest_component, summary.self_loops
    );
    for n in &summary.top_nodes {
        println!("  {} degree {}", n.address, n.degree);
    }
    Ok(())
}

fn regime_value(s: &str) -> Result<Value, Failure> {
    serde_json::to_value(parse_regime(s)?).map_err(|e| Failure::Input(e.into()))
}

pub fn sweep(a: &SweepArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("sweep", args);
    let mut spec: Value = match &a.spec {
        Some(p) => {
            m.config(p);
            read_json(p)?
        }
        None => json!({}),
    };
    let obj = spec
        .as_object_mut()
        .ok_or_else(|| usage("sweep spec must be a JSON object"))?;
    if let Some(p) = &a.scenario {
        m.input(p);
        obj.insert("scenario".into(), read_json(p)?);
    }
    if let Some(s) = &a.seeds {
        obj.insert("seeds".into(), json!(parse_seeds(s)?));
    }
    if let Some(h) = a.horizon {
        obj.insert("horizon".into(), json!(h));
    }
    if let Some(b) = a.initial_base_fee {
        obj.insert("initial_base_fee".into(), json!(b));
    }
    match &a.treatment {
        Some(t) => {
            obj.insert("treatment".into(), regime_value(t)?);
        }
        None => {
            obj.entry("treatment").or_insert(regime_value("post")?);
        }
    }
    match &a.control {
        Some(c) => {
            obj.insert("control".into(), regime_value(c)?);
        }
        None => {
            obj.entry("control").or_insert(regime_value("pre")?);
        }
    }
    for key in ["scenario", "seeds", "horizon"] {
        if !obj.contains_key(key) {
            return Err(usage(format!("sweep needs `{key}` (in the spec or as a flag)")));
        }
    }
    let mut spec: SweepSpec = serde_json::from_value(spec).context("invalid sweep spec")?;
    if spec.seeds.is_empty() {
        return Err(usage("sweep needs at least one seed"));
    }
    spec.scenario.validate().map_err(lib)?;
    spec.initial_base_fee = Some(spec.start_fee().map_err(lib)?);
    m.seeds(&spec.seeds);

    let jobs: Vec<(u64, bool)> = spec.seeds.iter().flat_map(|&s| [(s, true), (s, false)]).collect();
    let work = || -> Result<Vec<RunSummary>, feelab::Error> {
        jobs.par_iter()
            .map(|&(seed, treated)| {
                let regime = if treated { spec.treatment } else { spec.control };
                run_one(&spec, regime, seed)
            })
            .collect()
    };
    let runs = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| usage(e.to_string()))?
            .install(work),
        None => work(),
    }
    .map_err(lib)?;
    let (treatment, control): (Vec<_>, Vec<_>) = runs.into_iter().zip(&jobs).partition(|(_, (_, t))| *t);
    let treatment: Vec<RunSummary> = treatment.into_iter().map(|(r, _)| r).collect();
    let control: Vec<RunSummary> = control.into_iter().map(|(r, _)| r).collect();
    let tests = compare(&treatment, &control);

    prepare(out_dir)?;
    write_json(
        &out_dir.join("runs.json"),
        &json!({
            "initial_base_fee": spec.initial_base_fee,
            "treatment": treatment,
            "control": control,
        }),
    )?;
    write_json(&out_dir.join("comparison.json"), &tests)?;
    m.write(out_dir, &["runs.json", "comparison.json"])?;

    println!(
        "{} seeds; treatment {} vs control {}",
        spec.seeds.len(),
        spec.treatment.label(),
        spec.control.label()
    );
    println!(
        "{:<28} {:>12} {:>12} {:>5} {:>6} {:>5} {:>10}",
        "metric", "treatment", "control", "wins", "losses", "ties", "p"
    );
    for t in &tests {
        println!(
            "{:<28} {:>12.4} {:>12.4} {:>5} {:>6} {:>5} {:>10.3e}",
            t.metric, t.mean_treatment, t.mean_control, t.wins, t.losses, t.ties, t.p_value
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EquilibriumRow {
    interval: f64,
    base_fee_wei: f64,
    base_fee_gwei: f64,
}

pub fn equilibrium(a: &EquilibriumArgs, out_dir: &Path, args: Vec<String>) -> CmdResult {
    let mut m = ManifestBuilder::new("equilibrium", args);
    m.input(&a.scenario);
    let scenario: Scenario = read_json(&a.scenario)?;
    scenario.validate().map_err(lib)?;
    let demand = empirical_demand_curve(&scenario.arrivals, &scenario.surges, a.at);
    let params = FeeParams::<f64>::with_target(a.gas_target);
    let rows = a
        .interval
        .iter()
        .map(|&i| {
            let interval = BlockInterval::new(i).map_err(|e| usage(e.to_string()))?;
            let b = equilibrium_base_fee(&demand, interval, &params).map_err(lib)?.value();
            Ok(EquilibriumRow {
                interval: i,
                base_fee_wei: b,
                base_fee_gwei: b / 1e9,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    prepare(out_dir)?;
    write_json(&out_dir.join("equilibrium.json"), &rows)?;
    m.write(out_dir, &["equilibrium.json"])?;
    for r in &rows {
        println!("interval {:>6.2} s: base fee {:.4} gwei", r.interval, r.base_fee_gwei);
    }
    for w in rows.windows(2) {
        println!(
            "switching {} s -> {} s: jump base fee by {:+.2}%",
            w[0].interval,
            w[1].interval,
            100.0 * (w[1].base_fee_wei / w[0].base_fee_wei - 1.0)
        );
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    let bad = manifest::verify(&a.manifest)?;
    if bad.is_empty() {
        println!("all artifacts match");
        Ok(())
    } else {
        Err(Failure::Input(anyhow!("checksum mismatch: {}", bad.join(", "))))
    }
}
