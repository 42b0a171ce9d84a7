use std::path::Path;

use gtconverse::approx_bounds::{run_verify_suite, VerifyReport};
use gtconverse::infomath::ln_choose;
use gtconverse::simulator::{
    estimate_pe, estimate_pe_ensemble, gen_matrix, sweep_n, Decoder, Ensemble, EnsembleSpec,
    InfoDensityDecoder, MapDecoder, SimEstimate, SweepMode, SweepResult,
};
use gtconverse::thresholds::{
    best_chebyshev_bound, capacity_output_dist, chebyshev_error_lower_bound, default_delta1,
    default_delta_grid, i_star, optimize_mixture, strong_converse_threshold,
    weak_converse_threshold, ChebyshevBound, SetSampler, ThresholdResult, DEFAULT_C0,
    DEFAULT_CAPACITY_TOL, EXHAUSTIVE_SET_LIMIT,
};
use gtconverse::{Channel, Error, MeasurementMatrix, NoiseModel};
use serde::Serialize;

use crate::config::{load_config, merge, parse_grid, Format, Params, SeedArg};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_TRIALS: u64 = 10_000;

struct Rendered {
    text: String,
    failure: Option<String>,
}

pub fn dispatch(
    name: &str,
    flags: &Params,
    config_path: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let params = match config_path {
        Some(path) => {
            let (command, file) = load_config(path)?;
            if let Some(c) = command.filter(|c| c != name) {
                return Err(CliError::Usage(format!(
                    "{} was written by '{c}', not '{name}'",
                    path.display()
                )));
            }
            merge(flags, &file)
        }
        None => flags.clone(),
    };
    let rendered = match name {
        "threshold" => threshold(&params)?,
        "bound" => bound(&params)?,
        "simulate" => simulate(&params)?,
        "sweep" => sweep(&params)?,
        "verify" => verify(&params)?,
        "matrix" => matrix(&params)?,
        other => return Err(CliError::Usage(format!("unknown command '{other}'"))),
    };
    match output {
        Some(path) => std::fs::write(path, &rendered.text)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => print!("{}", rendered.text),
    }
    match rendered.failure {
        Some(msg) => Err(CliError::Failed(msg)),
        None => Ok(()),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn req<T: Clone>(v: &Option<T>, flag: &str, command: &str) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| usage(format!("{command} requires --{flag}")))
}

fn check_pk(p: usize, k: usize) -> Result<(), CliError> {
    if k == 0 || k > p {
        return Err(usage(format!("need 1 <= k <= p, got p = {p}, k = {k}")));
    }
    Ok(())
}

fn channel(spec: &str, k: usize) -> Result<Channel, CliError> {
    let model: NoiseModel = spec.parse().map_err(|e: Error| usage(e.to_string()))?;
    Channel::new(model, k).map_err(|e| usage(e.to_string()))
}

fn in_open_unit(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(usage(format!("--{name} = {x} must lie in (0, 1)")))
    }
}

fn eta_c0(params: &Params) -> Result<(f64, f64), CliError> {
    let eta = params.eta.unwrap_or(0.0);
    if !(0.0..1.0).contains(&eta) {
        return Err(usage(format!("--eta = {eta} must lie in [0, 1)")));
    }
    let c0 = params.c0.unwrap_or(DEFAULT_C0);
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(usage(format!("--c0 = {c0} must be positive")));
    }
    Ok((eta, c0))
}

fn trials(params: &Params) -> Result<u64, CliError> {
    match params.trials.unwrap_or(DEFAULT_TRIALS) {
        0 => Err(usage("--trials must be at least 1")),
        t => Ok(t),
    }
}

/// `required` commands refuse to run without `--seed`; `auto` draws one
/// from the clock and reports it on stderr.
fn seed(params: &Params, required: bool, command: &str) -> Result<u64, CliError> {
    match &params.seed {
        Some(SeedArg::Value(v)) => Ok(*v),
        Some(SeedArg::Word(w)) if w == "auto" => {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            let s = now ^ ((std::process::id() as u64) << 32);
            eprintln!("seed = {s}");
            Ok(s)
        }
        Some(SeedArg::Word(w)) => Err(usage(format!("bad seed '{w}'"))),
        None if required => Err(usage(format!(
            "{command} is randomized: pass --seed N or --seed auto"
        ))),
        None => Ok(0),
    }
}

fn format_of(params: &Params) -> Format {
    params.format.unwrap_or(Format::Json)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), num)
}

fn json_doc<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> String {
    #[derive(Serialize)]
    struct Doc<'a, C, R> {
        schema_version: u32,
        command: &'a str,
        config: &'a C,
        result: &'a R,
    }
    let doc = Doc {
        schema_version: SCHEMA_VERSION,
        command,
        config,
        result,
    };
    serde_json::to_string_pretty(&doc).expect("output serializes") + "\n"
}

fn csv_doc<C: Serialize>(
    command: &str,
    config: &C,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> String {
    let mut out = format!(
        "# gtconverse schema_version={SCHEMA_VERSION} command={command} config={}\n",
        serde_json::to_string(config).expect("config serializes")
    );
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

fn rendered(text: String) -> Rendered {
    Rendered {
        text,
        failure: None,
    }
}

#[derive(Serialize)]
struct ThresholdConfig {
    channel: String,
    p: usize,
    k: usize,
    eta: f64,
    c0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    atoms: Option<usize>,
    format: Format,
}

#[derive(Serialize)]
struct ThresholdOut {
    strong_threshold: f64,
    i_star: f64,
    nu_star: f64,
    capacity: f64,
    /// `C - I*`
    capacity_gap: f64,
    weak: Option<ThresholdResult>,
    mixture: Option<ThresholdResult>,
}

fn threshold(params: &Params) -> Result<Rendered, CliError> {
    let cmd = "threshold";
    let (p, k) = (req(&params.p, "p", cmd)?, req(&params.k, "k", cmd)?);
    check_pk(p, k)?;
    let spec = req(&params.channel, "channel", cmd)?;
    let ch = channel(&spec, k)?;
    let (eta, c0) = eta_c0(params)?;
    if let Some(a) = params.atoms.filter(|a| !(1..=3).contains(a)) {
        return Err(usage(format!("--atoms = {a} must be 1, 2 or 3")));
    }
    let cfg = ThresholdConfig {
        channel: spec,
        p,
        k,
        eta,
        c0,
        atoms: params.atoms,
        format: format_of(params),
    };
    let star = i_star(&ch);
    let cap = capacity_output_dist(&ch, DEFAULT_CAPACITY_TOL)?;
    let weak = (k < p)
        .then(|| weak_converse_threshold(p, k, &ch, eta, c0))
        .transpose()?;
    let mixture = match params.atoms {
        Some(a) if k < p => Some(optimize_mixture(p, k, &ch, eta, c0, a)?),
        _ => None,
    };
    let out = ThresholdOut {
        strong_threshold: strong_converse_threshold(p, k, &ch, eta)?,
        i_star: star.value,
        nu_star: star.nu,
        capacity: cap.capacity,
        capacity_gap: cap.capacity - star.value,
        weak,
        mixture,
    };
    Ok(rendered(match cfg.format {
        Format::Json => json_doc(cmd, &cfg, &out),
        Format::Csv => {
            let comments = vec![
                format!("strong_threshold={}", num(out.strong_threshold)),
                format!(
                    "weak_threshold={}",
                    opt_num(out.weak.as_ref().map(|w| w.n_threshold))
                ),
                format!(
                    "mixture_threshold={}",
                    opt_num(out.mixture.as_ref().map(|w| w.n_threshold))
                ),
                format!(
                    "i_star={} nu_star={} capacity={}",
                    num(out.i_star),
                    num(out.nu_star),
                    num(out.capacity)
                ),
            ];
            let mut rows = Vec::new();
            for (kind, r) in [("weak", &out.weak), ("mixture", &out.mixture)] {
                for row in r.iter().flat_map(|r| &r.per_ell) {
                    rows.push(vec![
                        kind.to_string(),
                        row.ell.to_string(),
                        num(row.nu),
                        num(row.mutual_information),
                        num(row.delta_ell),
                        num(row.log_numerator),
                        num(row.ratio),
                    ]);
                }
            }
            csv_doc(
                cmd,
                &cfg,
                &comments,
                &[
                    "kind",
                    "ell",
                    "nu",
                    "mutual_information",
                    "delta_ell",
                    "log_numerator",
                    "ratio",
                ],
                &rows,
            )
        }
    }))
}

#[derive(Serialize)]
struct BoundConfig {
    channel: String,
    k: usize,
    matrix: String,
    p: usize,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    delta1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    format: Format,
}

#[derive(Serialize)]
struct BoundOut {
    strong_threshold: f64,
    chebyshev: ChebyshevBound,
}

fn load_matrix(params: &Params, command: &str) -> Result<MeasurementMatrix, CliError> {
    let path = req(&params.matrix, "matrix", command)?;
    let m = MeasurementMatrix::load(&path)?;
    for (flag, given, actual) in [("p", params.p, m.p()), ("n", params.n, m.n())] {
        if let Some(g) = given.filter(|&g| g != actual) {
            return Err(usage(format!(
                "--{flag} = {g} disagrees with {} ({flag} = {actual})",
                path.display()
            )));
        }
    }
    Ok(m)
}

fn bound(params: &Params) -> Result<Rendered, CliError> {
    let cmd = "bound";
    let k = req(&params.k, "k", cmd)?;
    let spec = req(&params.channel, "channel", cmd)?;
    let matrix = load_matrix(params, cmd)?;
    let p = matrix.p();
    check_pk(p, k)?;
    let ch = channel(&spec, k)?;
    let delta = params.delta.map(|d| in_open_unit("delta", d)).transpose()?;
    let delta1 = in_open_unit("delta1", params.delta1.unwrap_or(default_delta1(p, k)))?;
    let exhaustive = ln_choose(p as u64, k as u64) <= (EXHAUSTIVE_SET_LIMIT as f64).ln() + 1e-9;
    let (sampler, trials, seed) = if exhaustive {
        (SetSampler::Exhaustive, None, None)
    } else {
        let (t, s) = (trials(params)?, seed(params, true, cmd)?);
        (
            SetSampler::MonteCarlo { trials: t, seed: s },
            Some(t),
            Some(s),
        )
    };
    let cfg = BoundConfig {
        channel: spec,
        k,
        matrix: req(&params.matrix, "matrix", cmd)?.display().to_string(),
        p,
        n: matrix.n(),
        delta,
        delta1,
        trials,
        seed,
        format: format_of(params),
    };
    let chebyshev = match delta {
        Some(d) => chebyshev_error_lower_bound(&matrix, &ch, k, delta1, d, sampler)?,
        None => best_chebyshev_bound(&matrix, &ch, k, delta1, sampler, &default_delta_grid())?,
    };
    let out = BoundOut {
        strong_threshold: strong_converse_threshold(p, k, &ch, 0.0)?,
        chebyshev,
    };
    Ok(rendered(match cfg.format {
        Format::Json => json_doc(cmd, &cfg, &out),
        Format::Csv => {
            let b = &out.chebyshev;
            let comments: Vec<String> = b.failure.iter().map(|f| format!("vacuous: {f}")).collect();
            csv_doc(
                cmd,
                &cfg,
                &comments,
                &[
                    "n",
                    "bound",
                    "vacuous",
                    "delta",
                    "delta1",
                    "i_star",
                    "capacity",
                    "log_sets",
                    "sets_evaluated",
                    "exhaustive",
                    "variance_term",
                    "variance_term_std_err",
                    "max_mean",
                    "strong_threshold",
                ],
                &[vec![
                    b.n.to_string(),
                    num(b.bound),
                    b.vacuous.to_string(),
                    num(b.delta),
                    num(b.delta1),
                    num(b.i_star),
                    num(b.capacity),
                    num(b.log_sets),
                    b.sets_evaluated.to_string(),
                    b.exhaustive.to_string(),
                    num(b.variance_term),
                    num(b.variance_term_std_err),
                    num(b.max_mean),
                    num(out.strong_threshold),
                ]],
            )
        }
    }))
}

/// Decoder flags shared by `simulate` and `sweep`.
struct DecoderChoice {
    name: String,
    gamma: Option<f64>,
    decoder: Box<dyn Decoder>,
}

fn decoder(params: &Params, ch: &Channel, p: usize, k: usize) -> Result<DecoderChoice, CliError> {
    let name = params.decoder.clone().unwrap_or_else(|| "map".into());
    match name.as_str() {
        "map" => Ok(DecoderChoice {
            name,
            gamma: None,
            decoder: Box::new(MapDecoder::new(ch.clone())),
        }),
        "info-density" => {
            let gamma = params.gamma.unwrap_or_else(|| {
                ln_choose(p as u64, k as u64) + params.delta1.unwrap_or(default_delta1(p, k)).ln()
            });
            let q = capacity_output_dist(ch, DEFAULT_CAPACITY_TOL)?.q_star_pair();
            Ok(DecoderChoice {
                name,
                gamma: Some(gamma),
                decoder: Box::new(InfoDensityDecoder::new(ch.clone(), q, gamma)),
            })
        }
        other => Err(usage(format!(
            "--decoder must be 'map' or 'info-density', got '{other}'"
        ))),
    }
}

/// `--ensemble`, defaulting to i.i.d. entries at the density maximizing `I*`.
fn ensemble(params: &Params, ch: &Channel) -> Result<String, CliError> {
    let text = params
        .ensemble
        .clone()
        .unwrap_or_else(|| Ensemble::Iid { nu: i_star(ch).nu }.to_string());
    text.parse::<Ensemble>().map_err(|e| usage(e.to_string()))?;
    Ok(text)
}

fn mode(params: &Params) -> Result<SweepMode, CliError> {
    match params.mode.as_deref().unwrap_or("ensemble") {
        "ensemble" => Ok(SweepMode::Ensemble),
        "fixed" => Ok(SweepMode::Fixed),
        other => Err(usage(format!(
            "--mode must be 'ensemble' or 'fixed', got '{other}'"
        ))),
    }
}

#[derive(Serialize)]
struct SimulateConfig {
    channel: String,
    p: usize,
    k: usize,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<String>,
    mode: SweepMode,
    decoder: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    trials: u64,
    seed: u64,
    format: Format,
}

#[derive(Serialize)]
struct SimulateOut {
    estimate: SimEstimate,
}

const ESTIMATE_HEADER: [&str; 6] = ["n", "trials", "errors", "pe_hat", "ci_low", "ci_high"];

fn estimate_row(n: usize, e: &SimEstimate) -> Vec<String> {
    vec![
        n.to_string(),
        e.trials.to_string(),
        e.errors.to_string(),
        num(e.pe_hat),
        num(e.ci_low),
        num(e.ci_high),
    ]
}

fn simulate(params: &Params) -> Result<Rendered, CliError> {
    let cmd = "simulate";
    let k = req(&params.k, "k", cmd)?;
    let spec = req(&params.channel, "channel", cmd)?;
    let file_matrix = params
        .matrix
        .is_some()
        .then(|| load_matrix(params, cmd))
        .transpose()?;
    let (p, n) = match &file_matrix {
        Some(m) => (m.p(), m.n()),
        None => (req(&params.p, "p", cmd)?, req(&params.n, "n", cmd)?),
    };
    check_pk(p, k)?;
    let ch = channel(&spec, k)?;
    let mode = if file_matrix.is_some() {
        if params.mode.as_deref().is_some_and(|m| m != "fixed") {
            return Err(usage("--matrix implies --mode fixed"));
        }
        SweepMode::Fixed
    } else {
        mode(params)?
    };
    let ens = match file_matrix {
        Some(_) => None,
        None => Some(ensemble(params, &ch)?),
    };
    let trials = trials(params)?;
    // With p = k there is a single candidate set and nothing depends on the seed.
    let seed = seed(params, p > k, cmd)?;
    let dec = decoder(params, &ch, p, k)?;
    let cfg = SimulateConfig {
        channel: spec,
        p,
        k,
        n,
        matrix: params.matrix.as_ref().map(|m| m.display().to_string()),
        ensemble: ens.clone(),
        mode,
        decoder: dec.name.clone(),
        gamma: dec.gamma,
        trials,
        seed,
        format: format_of(params),
    };
    let estimate = match (file_matrix, ens) {
        (Some(m), _) => estimate_pe(&m, &ch, k, dec.decoder.as_ref(), trials, seed)?,
        (None, Some(e)) => {
            let es = EnsembleSpec {
                ensemble: e.parse()?,
                seed,
            };
            match mode {
                SweepMode::Ensemble => {
                    estimate_pe_ensemble(&es, n, p, &ch, k, dec.decoder.as_ref(), trials, seed)?
                }
                SweepMode::Fixed => {
                    let m = gen_matrix(&es, n, p, k)?;
                    estimate_pe(&m, &ch, k, dec.decoder.as_ref(), trials, seed)?
                }
            }
        }
        (None, None) => unreachable!("either a matrix file or an ensemble"),
    };
    let out = SimulateOut { estimate };
    Ok(rendered(match cfg.format {
        Format::Json => json_doc(cmd, &cfg, &out),
        Format::Csv => csv_doc(
            cmd,
            &cfg,
            &[],
            &ESTIMATE_HEADER,
            &[estimate_row(n, &out.estimate)],
        ),
    }))
}

#[derive(Serialize)]
struct SweepConfig {
    channel: String,
    p: usize,
    k: usize,
    n_grid: String,
    ensemble: String,
    mode: SweepMode,
    decoder: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    trials: u64,
    seed: u64,
    eta: f64,
    c0: f64,
    format: Format,
}

#[derive(Serialize)]
struct SweepOut {
    strong_threshold: f64,
    weak_threshold: Option<f64>,
    /// `n` where the isotonic error curve crosses 0.5.
    crossing: Option<f64>,
    crossing_over_strong: Option<f64>,
    sweep: SweepResult,
}

fn sweep(params: &Params) -> Result<Rendered, CliError> {
    let cmd = "sweep";
    let (p, k) = (req(&params.p, "p", cmd)?, req(&params.k, "k", cmd)?);
    check_pk(p, k)?;
    let spec = req(&params.channel, "channel", cmd)?;
    let ch = channel(&spec, k)?;
    let grid = parse_grid(&req(&params.n_grid, "n-grid", cmd)?)?;
    let (eta, c0) = eta_c0(params)?;
    let ens = ensemble(params, &ch)?;
    let mode = mode(params)?;
    let trials = trials(params)?;
    let seed = seed(params, p > k, cmd)?;
    let dec = decoder(params, &ch, p, k)?;
    let cfg = SweepConfig {
        channel: spec,
        p,
        k,
        n_grid: grid
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
        ensemble: ens.clone(),
        mode,
        decoder: dec.name.clone(),
        gamma: dec.gamma,
        trials,
        seed,
        eta,
        c0,
        format: format_of(params),
    };
    let es = EnsembleSpec {
        ensemble: ens.parse()?,
        seed,
    };
    let result = sweep_n(
        &es,
        &ch,
        p,
        k,
        &grid,
        dec.decoder.as_ref(),
        trials,
        seed,
        mode,
    )?;
    let strong = strong_converse_threshold(p, k, &ch, eta)?;
    let weak = (k < p)
        .then(|| weak_converse_threshold(p, k, &ch, eta, c0).map(|w| w.n_threshold))
        .transpose()?;
    let crossing = result.crossing(0.5);
    let out = SweepOut {
        strong_threshold: strong,
        weak_threshold: weak,
        crossing,
        crossing_over_strong: crossing.filter(|_| strong > 0.0).map(|c| c / strong),
        sweep: result,
    };
    Ok(rendered(match cfg.format {
        Format::Json => json_doc(cmd, &cfg, &out),
        Format::Csv => {
            let comments = vec![
                format!("strong_threshold={}", num(out.strong_threshold)),
                format!("weak_threshold={}", opt_num(out.weak_threshold)),
                format!("crossing={}", opt_num(out.crossing)),
                format!(
                    "isotonic={}",
                    out.sweep
                        .isotonic
                        .iter()
                        .map(|x| num(*x))
                        .collect::<Vec<_>>()
                        .join(";")
                ),
            ];
            let rows: Vec<Vec<String>> = out
                .sweep
                .points
                .iter()
                .map(|pt| estimate_row(pt.n, &pt.estimate))
                .collect();
            csv_doc(cmd, &cfg, &comments, &ESTIMATE_HEADER, &rows)
        }
    }))
}

#[derive(Serialize)]
struct VerifyConfig {
    trials: u64,
    seed: u64,
    format: Format,
}

fn verify(params: &Params) -> Result<Rendered, CliError> {
    let cmd = "verify";
    let cfg = VerifyConfig {
        trials: trials(params)?,
        seed: seed(params, true, cmd)?,
        format: format_of(params),
    };
    let report: VerifyReport = run_verify_suite(cfg.trials, cfg.seed)?;
    let failure = (!report.passed()).then(|| {
        format!(
            "{} TV-bound and {} MI-continuity violations",
            report.tv.violations.len(),
            report.mi.violations.len()
        )
    });
    let text = match cfg.format {
        Format::Json => json_doc(cmd, &cfg, &report),
        Format::Csv => {
            let tv_steps = ["revealed", "hidden", "binomial"];
            let mi_checks = ["perturbation", "conditional_swap", "data_processing"];
            let mut rows = Vec::new();
            for (i, step) in tv_steps.iter().enumerate() {
                let v = report
                    .tv
                    .violations
                    .iter()
                    .filter(|r| r.step as usize == i)
                    .count();
                rows.push(vec![
                    "tv".into(),
                    step.to_string(),
                    report.tv.tuples.to_string(),
                    v.to_string(),
                    num(report.tv.worst_ratio[i]),
                ]);
            }
            for (i, check) in mi_checks.iter().enumerate() {
                let v = report
                    .mi
                    .violations
                    .iter()
                    .filter(|r| r.check as usize == i)
                    .count();
                rows.push(vec![
                    "mi".into(),
                    check.to_string(),
                    report.mi.trials.to_string(),
                    v.to_string(),
                    num(report.mi.worst_ratio[i]),
                ]);
            }
            csv_doc(
                cmd,
                &cfg,
                &[],
                &["suite", "check", "checks", "violations", "worst_ratio"],
                &rows,
            )
        }
    };
    Ok(Rendered { text, failure })
}

#[derive(Serialize)]
struct MatrixConfig {
    ensemble: String,
    n: usize,
    p: usize,
    k: usize,
    seed: u64,
}

fn matrix(params: &Params) -> Result<Rendered, CliError> {
    let cmd = "matrix";
    let cfg = MatrixConfig {
        ensemble: req(&params.ensemble, "ensemble", cmd)?,
        n: req(&params.n, "n", cmd)?,
        p: req(&params.p, "p", cmd)?,
        k: req(&params.k, "k", cmd)?,
        seed: seed(params, true, cmd)?,
    };
    check_pk(cfg.p, cfg.k)?;
    let ensemble: Ensemble = cfg
        .ensemble
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    ensemble
        .validate(cfg.n, cfg.k)
        .map_err(|e| usage(e.to_string()))?;
    let m = gen_matrix(
        &EnsembleSpec {
            ensemble,
            seed: cfg.seed,
        },
        cfg.n,
        cfg.p,
        cfg.k,
    )?;
    Ok(rendered(format!(
        "# gtconverse schema_version={SCHEMA_VERSION} command={cmd} config={}\n{}",
        serde_json::to_string(&cfg).expect("config serializes"),
        m.to_text()
    )))
}
