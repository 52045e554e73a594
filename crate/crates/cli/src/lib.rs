//! Subcommands over JSON files. Exit codes: 0 success or predicate true,
//! 1 predicate false, 2 input error. Every result carries `schema_version`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermigauss::channels::{apply_channel_cm, gsep_triviality_probe};
use fermigauss::gfs_cm::{correlation_rank, is_s2pi_separable_cm, validate_cm, Bipartition, CovarianceMatrix};
use fermigauss::glu_standard::{standard_form_distance, standard_form_with, StandardFormConfig};
use fermigauss::io::{self, StateInput};
use fermigauss::jw_fock::{
    cm_from_state, is_gaussian_four_mode_pure, is_gaussian_operator, is_gaussian_two_mode, lambda_residual,
    FockVector,
};
use fermigauss::locc_sim::{run_protocol, verify_deterministic, DeterminismCheck};
use fermigauss::slocc::{classify_3mode, classify_4mode_seed, normal_form_iterate};
use fermigauss::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOL_ENV: &str = "FERMI_GAUSS_TOL";

#[derive(Parser, Debug)]
#[command(name = "fermigauss", version, about = "Gaussian fermionic state toolkit")]
pub struct Cli {
    /// Overrides the command's default tolerance.
    #[arg(long, global = true, env = TOL_ENV)]
    pub tol: Option<f64>,
    /// Keeps every Z-flip bit at zero in standard forms.
    #[arg(long, global = true)]
    pub no_z_flips: bool,
    /// RNG seed for sampling commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Physicality, purity and Williamson spectrum of a CM.
    Validate { input: PathBuf },
    /// Standard form of a CM or state.
    StandardForm { input: PathBuf },
    /// GLU equivalence of two CMs or states.
    Equivalent { first: PathBuf, second: PathBuf },
    /// SLOCC class of a pure state or a four-mode seed family.
    Classify(ClassifyArgs),
    /// Gaussianity tests on a pure or mixed state.
    Gaussianity { input: PathBuf },
    /// Applies a Gaussian channel to a CM or state.
    ApplyChannel(ApplyChannelArgs),
    /// Runs a local protocol on a pure state.
    SimulateProtocol(SimulateArgs),
    /// Iterative normal form of a pure state.
    NormalForm {
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
    },
    /// Direct-sum separability and correlation rank across a partition.
    Separability {
        input: PathBuf,
        /// Party label per mode, e.g. `0,0,1`.
        #[arg(long, value_delimiter = ',')]
        partition: Vec<usize>,
    },
    /// Runs a JSON-lines manifest of commands.
    Batch {
        manifest: PathBuf,
        /// Report file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    pub input: Option<PathBuf>,
    /// Expected mode count.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Four-mode seed family: G_abcd, L_abc2, L_a2b2 or NullCone4.
    #[arg(long)]
    pub family: Option<String>,
    /// Seed parameters as a JSON list of numbers or `[re, im]` pairs.
    #[arg(long)]
    pub params: Option<String>,
}

#[derive(Args, Debug)]
pub struct ApplyChannelArgs {
    pub channel: PathBuf,
    pub input: PathBuf,
    /// Also run the separable-channel probe with this many samples.
    #[arg(long)]
    pub probe: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum CheckMode {
    Exact,
    Glu,
    Both,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub protocol: PathBuf,
    pub input: PathBuf,
    /// Target state; enables the determinism verdict.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CheckMode::Both)]
    pub check: CheckMode,
}

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: Option<String>,
}

struct Reply {
    code: i32,
    body: Value,
}

impl Reply {
    fn verdict(ok: bool, body: Value) -> Self {
        Reply {
            code: if ok { 0 } else { 1 },
            body,
        }
    }

    fn ok(body: Value) -> Self {
        Reply { code: 0, body }
    }
}

type CmdResult = Result<Reply, String>;

fn err(e: Error) -> String {
    e.to_string()
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run(argv: &[String]) -> Output {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output {
                    code,
                    stdout: text.trim_end().to_string(),
                    stderr: None,
                }
            } else {
                error_output(text.trim_end())
            };
        }
    };
    execute(&cli, None)
}

fn error_output(msg: &str) -> Output {
    let body = with_schema(json!({ "error": msg }));
    Output {
        code: 2,
        stdout: render(&body),
        stderr: Some(format!("error: {msg}")),
    }
}

fn with_schema(body: Value) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    if let Value::Object(m) = body {
        map.extend(m);
    }
    Value::Object(map)
}

fn execute(cli: &Cli, base: Option<&Path>) -> Output {
    let resolve = |p: &Path| match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    };
    let result = match &cli.command {
        Command::Validate { input } => validate(&resolve(input)),
        Command::StandardForm { input } => standard(&resolve(input), cli),
        Command::Equivalent { first, second } => equivalent(&resolve(first), &resolve(second), cli),
        Command::Classify(a) => classify(a, a.input.as_deref().map(resolve)),
        Command::Gaussianity { input } => gaussianity(&resolve(input)),
        Command::ApplyChannel(a) => apply_channel(&resolve(&a.channel), &resolve(&a.input), a.probe, cli),
        Command::SimulateProtocol(a) => simulate(&resolve(&a.protocol), &resolve(&a.input), a.target.as_deref().map(resolve), a.check, cli),
        Command::NormalForm { input, max_iter } => normal_form(&resolve(input), *max_iter, cli),
        Command::Separability { input, partition } => separability(&resolve(input), partition),
        Command::Batch { manifest, output } => return batch(&resolve(manifest), output.as_deref().map(resolve)),
    };
    match result {
        Ok(r) => Output {
            code: r.code,
            stdout: render(&with_schema(r.body)),
            stderr: None,
        },
        Err(msg) => error_output(&msg),
    }
}

fn read(path: &Path) -> Result<String, String> {
    io::read_to_string(path).map_err(err)
}

/// CM file, or the CM of a state file.
fn load_cm(path: &Path) -> Result<CovarianceMatrix, String> {
    let text = read(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if v.get("gamma").is_some() {
        io::parse_cm(&text).map_err(err)
    } else {
        match io::parse_state(&text).map_err(err)? {
            StateInput::Vector(psi) => cm_from_state(&psi).map_err(err),
            StateInput::Density(rho) => cm_from_state(&rho).map_err(err),
        }
    }
}

fn load_state(path: &Path) -> Result<StateInput, String> {
    io::parse_state(&read(path)?).map_err(err)
}

fn load_vector(path: &Path) -> Result<FockVector, String> {
    match load_state(path)? {
        StateInput::Vector(v) => Ok(v),
        StateInput::Density(_) => Err(format!("{}: a pure state (\"amplitudes\") is required", path.display())),
    }
}

fn cm_json(cm: &CovarianceMatrix) -> Value {
    io::cm_to_json(cm)
}

fn amplitudes_json(psi: &FockVector) -> Value {
    Value::Array(psi.amplitudes().iter().map(|z| json!([z.re, z.im])).collect())
}

fn validate(path: &Path) -> CmdResult {
    let cm = load_cm(path)?;
    let r = validate_cm(cm.gamma()).map_err(err)?;
    Ok(Reply::verdict(
        r.physical,
        json!({
            "antisymmetric": r.antisymmetric,
            "physical": r.physical,
            "pure": r.pure,
            "williamson_spectrum": r.williamson_spectrum,
        }),
    ))
}

fn sf_config(cli: &Cli) -> StandardFormConfig {
    StandardFormConfig {
        allow_z_flips: !cli.no_z_flips,
    }
}

fn standard(path: &Path, cli: &Cli) -> CmdResult {
    let cm = load_cm(path)?;
    let r = standard_form_with(&cm, &sf_config(cli)).map_err(err)?;
    Ok(Reply::ok(json!({
        "s_gamma": cm_json(&r.s_gamma),
        "ops": serde_json::to_value(&r.ops).map_err(|e| e.to_string())?,
        "decision_log": serde_json::to_value(&r.decision_log).map_err(|e| e.to_string())?,
    })))
}

fn equivalent(a: &Path, b: &Path, cli: &Cli) -> CmdResult {
    let (x, y) = (load_cm(a)?, load_cm(b)?);
    let tol = cli.tol.unwrap_or(fermigauss::glu_standard::EQUIVALENCE_TOL);
    let d = standard_form_distance(&x, &y, &sf_config(cli)).map_err(err)?;
    let eq = d < tol;
    Ok(Reply::verdict(eq, json!({ "equivalent": eq, "distance": d, "tol": tol })))
}

fn classify(a: &ClassifyArgs, input: Option<PathBuf>) -> CmdResult {
    if let Some(family) = &a.family {
        let params: Vec<io::ComplexJson> = match &a.params {
            Some(p) => serde_json::from_str(p).map_err(|e| format!("--params: {e}"))?,
            None => Vec::new(),
        };
        let params: Vec<_> = params.into_iter().map(Into::into).collect();
        let label = classify_4mode_seed(&params, family).map_err(err)?;
        return Ok(Reply::ok(serde_json::to_value(&label).map_err(|e| e.to_string())?));
    }
    let path = input.ok_or("classify needs a state file or --family")?;
    let psi = load_vector(&path)?;
    if let Some(m) = a.modes {
        if m != psi.modes() {
            return Err(err(Error::WrongModeCount {
                expected: m,
                found: psi.modes(),
            }));
        }
    }
    let label = classify_3mode(&psi).map_err(err)?;
    Ok(Reply::ok(serde_json::to_value(&label).map_err(|e| e.to_string())?))
}

fn gaussianity(path: &Path) -> CmdResult {
    match load_state(path)? {
        StateInput::Vector(psi) => {
            let residual = lambda_residual(&psi);
            let gaussian = fermigauss::jw_fock::is_gaussian_pure(&psi).map_err(err)?;
            let mut body = json!({
                "kind": "pure",
                "modes": psi.modes(),
                "gaussian": gaussian,
                "lambda_residual": residual,
            });
            if psi.modes() == 2 {
                body["two_mode_determinant"] = json!(is_gaussian_two_mode(&psi.to_density()).map_err(err)?);
            }
            if psi.modes() == 4 {
                body["xyxy"] = json!(is_gaussian_four_mode_pure(&psi).map_err(err)?);
            }
            Ok(Reply::verdict(gaussian, body))
        }
        StateInput::Density(rho) => {
            let gaussian = is_gaussian_operator(rho.matrix(), rho.modes()).map_err(err)?;
            let mut body = json!({ "kind": "mixed", "modes": rho.modes(), "gaussian": gaussian });
            if rho.modes() == 2 {
                body["two_mode_determinant"] = json!(is_gaussian_two_mode(&rho).map_err(err)?);
            }
            Ok(Reply::verdict(gaussian, body))
        }
    }
}

fn apply_channel(ch_path: &Path, input: &Path, probe: Option<usize>, cli: &Cli) -> CmdResult {
    let ch = io::parse_channel(&read(ch_path)?).map_err(err)?;
    let cm = load_cm(input)?;
    let out = apply_channel_cm(&ch, &cm).map_err(err)?;
    let report = validate_cm(out.gamma()).map_err(err)?;
    let mut body = json!({
        "output": cm_json(&out),
        "physical": report.physical,
        "pure": report.pure,
    });
    if let Some(samples) = probe {
        let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
        let r = gsep_triviality_probe(&ch, samples, &mut rng).map_err(err)?;
        body["probe"] = serde_json::to_value(&r).map_err(|e| e.to_string())?;
    }
    Ok(Reply::ok(body))
}

fn simulate(protocol: &Path, input: &Path, target: Option<PathBuf>, check: CheckMode, cli: &Cli) -> CmdResult {
    let p = io::parse_protocol(&read(protocol)?).map_err(err)?;
    let psi = load_vector(input)?;
    let branches = run_protocol(&psi, &p).map_err(err)?;
    let rows: Vec<Value> = branches
        .iter()
        .map(|b| {
            json!({
                "transcript": b.transcript,
                "probability": b.probability,
                "amplitudes": amplitudes_json(&b.state),
            })
        })
        .collect();
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    let mut body = json!({ "branches": rows, "total_probability": total });
    let Some(t) = target else {
        return Ok(Reply::ok(body));
    };
    let target = load_vector(&t)?;
    let mode = match check {
        CheckMode::Exact => DeterminismCheck::Exact,
        CheckMode::Glu => DeterminismCheck::UpToGlu,
        CheckMode::Both => DeterminismCheck::Both,
    };
    let tol = cli.tol.unwrap_or(1e-9);
    let det = verify_deterministic(&psi, &target, &p, tol, mode).map_err(err)?;
    body["deterministic"] = json!(det);
    Ok(Reply::verdict(det, body))
}

fn normal_form(path: &Path, max_iter: usize, cli: &Cli) -> CmdResult {
    let psi = load_vector(path)?;
    let tol = cli.tol.unwrap_or(1e-10);
    let t = normal_form_iterate(&psi, max_iter, tol).map_err(err)?;
    let ops: Vec<Value> = t
        .local_ops_product
        .iter()
        .map(|d| json!([[d[0].re, d[0].im], [d[1].re, d[1].im]]))
        .collect();
    Ok(Reply::ok(json!({
        "verdict": t.verdict,
        "iterations": t.iterations,
        "final_norm": t.norm_history.last().copied().unwrap_or(1.0),
        "final_state": t.final_state.as_ref().map(amplitudes_json),
        "local_ops_product": ops,
    })))
}

fn separability(path: &Path, partition: &[usize]) -> CmdResult {
    let cm = load_cm(path)?;
    let part = if partition.is_empty() {
        Bipartition::split_at(cm.modes(), cm.modes() / 2)
    } else {
        Bipartition::new(partition.to_vec())
    };
    let sep = is_s2pi_separable_cm(&cm, &part).map_err(err)?;
    let rank = correlation_rank(&cm, &part).map_err(err)?;
    Ok(Reply::verdict(
        sep,
        json!({ "s2pi_separable": sep, "correlation_rank": rank, "partition": part.labels() }),
    ))
}

/// One manifest row: `{"command": "...", "inputs": [...], "flags": [...]}`.
fn batch_row(line: &str, base: &Path) -> Value {
    let row: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({ "error": format!("manifest row: {e}") }),
    };
    let Some(command) = row.get("command").and_then(Value::as_str) else {
        return json!({ "error": "manifest row without \"command\"" });
    };
    if command == "batch" {
        return json!({ "error": "nested batch rows are not allowed" });
    }
    let strings = |key: &str| -> Vec<String> {
        row.get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
            .unwrap_or_default()
    };
    let mut argv = vec!["fermigauss".to_string(), command.to_string()];
    argv.extend(strings("flags"));
    argv.extend(strings("inputs"));
    let out = match Cli::try_parse_from(&argv) {
        Ok(cli) => execute(&cli, Some(base)),
        Err(e) => error_output(e.render().to_string().trim_end()),
    };
    let result: Value = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    json!({ "command": command, "exit_code": out.code, "result": result })
}

fn batch(manifest: &Path, output: Option<PathBuf>) -> Output {
    let text = match read(manifest) {
        Ok(t) => t,
        Err(e) => return error_output(&e),
    };
    let base = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let rows: Vec<Value> = lines.par_iter().map(|l| batch_row(l, &base)).collect();
    let report: Vec<String> = rows
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r["row"] = json!(i);
            render(&with_schema(r))
        })
        .collect();
    let mut joined = report.join("\n");
    if let Some(path) = output {
        if !joined.is_empty() {
            joined.push('\n');
        }
        if let Err(e) = std::fs::write(&path, &joined) {
            return error_output(&format!("{}: {e}", path.display()));
        }
        let summary = with_schema(json!({ "rows": lines.len(), "report": path.display().to_string() }));
        return Output {
            code: 0,
            stdout: render(&summary),
            stderr: None,
        };
    }
    Output {
        code: 0,
        stdout: joined,
        stderr: None,
    }
}

/// Compact JSON with every non-integer number written as `{:.16e}`.
pub fn render(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, &mut s);
    s
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format!("{:.16e}", n.as_f64().unwrap()));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(x, out);
            }
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_fixed_format() {
        let v = json!({"a": 0.5, "b": 3, "c": [1.0, -2.5e-12], "d": "x"});
        assert_eq!(
            render(&v),
            r#"{"a":5.0000000000000000e-1,"b":3,"c":[1.0000000000000000e0,-2.4999999999999998e-12],"d":"x"}"#
        );
    }

    #[test]
    fn schema_version_first() {
        let v = with_schema(json!({"x": true}));
        assert!(render(&v).starts_with(r#"{"schema_version":1"#));
    }

    #[test]
    fn bad_subcommand_is_input_error() {
        let out = run(&["fermigauss".into(), "nope".into()]);
        assert_eq!(out.code, 2);
        assert!(out.stdout.contains("schema_version"));
    }
}
