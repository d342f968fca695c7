use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use restricted_mc::bounds::evaluate_request;
use restricted_mc::engine::expected_output;
use restricted_mc::problems::{make_grid_problem, FamilySpec, GridProblem};
use restricted_mc::rates::{default_seeds, fit_loglog_slope, rates_sweep, write_rates_csv, BitsRule, DEFAULT_CELLS};
use restricted_mc::suite::{find_case, run_suite_on, verification_suite, SuiteCase, SuiteOptions, SUITES};
use restricted_mc::transforms::derandomize;
use restricted_mc::tree::{DecisionTree, Node};
use restricted_mc::wellformed::assert_well_formed;
use restricted_mc::{Caps, Error, FiniteRestriction, InfoQuery, Problem, Rational, Strategy};

type Q = Rational;

#[derive(Parser)]
#[command(name = "rmc", version, about = "Restricted Monte Carlo laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print a JSON report.
    Verify(Flags),
    /// Derandomize a strategy into an explicit deterministic tree.
    Derandomize(Flags),
    /// Sweep the bit-stratified integrator and write a CSV.
    Rates(Flags),
    /// Evaluate a bound calculator.
    Bounds(Flags),
}

#[derive(clap::Args, Debug, Default)]
struct Flags {
    /// JSON file mirroring these flags; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lemma1, lemma2, markov, factor3, theorem1 or all.
    #[arg(long)]
    suite: Option<String>,
    /// grid or lipschitz.
    #[arg(long)]
    problem: Option<String>,
    /// Grid size.
    #[arg(long)]
    m: Option<String>,
    /// Built-in strategy name or path to a tree JSON file.
    #[arg(long)]
    strategy: Option<String>,
    /// Information budget, or cell counts for rates (`8..256` doubles, `8,16,32` lists).
    #[arg(long)]
    n: Option<String>,
    /// Random budget.
    #[arg(long)]
    k: Option<String>,
    /// Alphabet size for bounds.
    #[arg(long)]
    q: Option<String>,
    /// Bits per cell: `log2` or an integer.
    #[arg(long)]
    bits: Option<String>,
    /// A count `N` (seeds 0..N), a range `a..b` or a list `1,5,9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Random strategies per budget in the theorem1 suite.
    #[arg(long)]
    samples: Option<String>,
    /// rational or float.
    #[arg(long)]
    mode: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with one family spec or an array of them.
    #[arg(long)]
    family: Option<PathBuf>,
    /// thm1, cor2, cor3 or kappa.
    #[arg(long)]
    bound: Option<String>,
    /// Bound parameter, `key=value`; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
}

/// Flags merged with the config file, as raw strings.
struct Settings {
    values: BTreeMap<String, String>,
    params: serde_json::Map<String, Value>,
    out: Option<PathBuf>,
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Array(items) => Some(items.iter().filter_map(scalar_string).collect::<Vec<_>>().join(",")),
        _ => None,
    }
}

impl Settings {
    fn new(flags: Flags) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut params = serde_json::Map::new();
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let cfg: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            let obj = cfg.as_object().ok_or_else(|| anyhow!("config must be a JSON object"))?;
            for (key, v) in obj {
                if key == "params" {
                    params = v.as_object().cloned().ok_or_else(|| anyhow!("`params` must be an object"))?;
                } else if let Some(s) = scalar_string(v) {
                    values.insert(key.clone(), s);
                } else {
                    bail!("config key `{key}` has an unsupported value");
                }
            }
        }
        let given = [
            ("suite", flags.suite),
            ("problem", flags.problem),
            ("m", flags.m),
            ("strategy", flags.strategy),
            ("n", flags.n),
            ("k", flags.k),
            ("q", flags.q),
            ("bits", flags.bits),
            ("seeds", flags.seeds),
            ("samples", flags.samples),
            ("mode", flags.mode),
            ("bound", flags.bound),
            ("out", flags.out.map(|p| p.display().to_string())),
            ("family", flags.family.map(|p| p.display().to_string())),
        ];
        for (key, v) in given {
            if let Some(v) = v {
                values.insert(key.into(), v);
            }
        }
        for p in flags.params {
            let (key, raw) = p.split_once('=').ok_or_else(|| anyhow!("--param expects key=value, got `{p}`"))?;
            let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
            params.insert(key.into(), v);
        }
        let out = values.get("out").map(PathBuf::from);
        Ok(Settings { values, params, out })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| v.parse::<usize>().map_err(|_| anyhow!("--{key} must be a nonnegative integer, got `{v}`")))
            .transpose()
    }

    fn mode(&self, required: &str) -> Result<()> {
        match self.get("mode") {
            None => Ok(()),
            Some(m) if m == required => Ok(()),
            Some(m @ ("rational" | "float")) => bail!("this command runs in {required} mode, not {m}"),
            Some(m) => bail!("unknown mode `{m}`; expected rational or float"),
        }
    }

    fn problem(&self, default: &str) -> Result<()> {
        match self.get("problem") {
            None => Ok(()),
            Some(p) if p == default => Ok(()),
            Some(p @ ("grid" | "lipschitz")) => bail!("this command needs the {default} problem, not {p}"),
            Some(p) => bail!("unknown problem `{p}`"),
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || anyhow!("cannot parse seeds `{spec}`");
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else if spec.contains(',') {
        spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    } else {
        (0..spec.trim().parse::<u64>().map_err(|_| bad())?).collect()
    };
    if seeds.is_empty() {
        bail!("seed list `{spec}` is empty");
    }
    Ok(seeds)
}

fn parse_cells(spec: &str) -> Result<Vec<usize>> {
    let bad = || anyhow!("cannot parse cell counts `{spec}`");
    let cells: Vec<usize> = if let Some((a, b)) = spec.split_once("..") {
        let (mut a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a == 0 {
            return Err(bad());
        }
        let mut out = Vec::new();
        while a <= b {
            out.push(a);
            a *= 2;
        }
        out
    } else {
        spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if cells.is_empty() || cells.contains(&0) {
        return Err(bad());
    }
    Ok(cells)
}

fn cmd_verify(s: &Settings) -> Result<bool> {
    s.mode("rational")?;
    s.problem("grid")?;
    let name = s.get("suite").ok_or_else(|| anyhow!("verify needs --suite ({})", SUITES.join(", ")))?;
    if !SUITES.contains(&name) {
        return Err(Error::UnknownSuite(name.into()).into());
    }
    let cases: Vec<SuiteCase> = match s.get("strategy") {
        Some(st) => vec![find_case(st).ok_or_else(|| anyhow!("unknown built-in strategy `{st}`"))?],
        None => verification_suite(),
    };
    let budgets = match (s.usize("n")?, s.usize("k")?) {
        (None, None) => None,
        (n, k) => {
            if name != "markov" {
                bail!("--n and --k set budgets for the markov suite only");
            }
            Some(Caps::new(n.unwrap_or(0), k.unwrap_or(0)))
        }
    };
    let defaults = SuiteOptions::default();
    let opts = SuiteOptions {
        m: s.usize("m")?.unwrap_or(defaults.m),
        adversarial: s.usize("samples")?.unwrap_or(defaults.adversarial),
        markov_budgets: budgets,
    };
    let reports = run_suite_on(name, &cases, &opts)?;
    let passed = reports.iter().all(|r| r.passed());
    let body = if name == "all" {
        json!({
            "suite": "all",
            "passed": passed,
            "suites": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        })
    } else {
        reports[0].to_json()
    };
    s.emit(&pretty(&body)?)?;
    for r in &reports {
        eprintln!(
            "{}: {} ({} checks, {} failed)",
            r.suite,
            if r.passed() { "pass" } else { "FAIL" },
            r.checks.len(),
            r.failures().len()
        );
    }
    Ok(passed)
}

fn max_coord(node: &Node<Q>) -> usize {
    match node {
        Node::Info { query, children } => {
            let here = match query {
                InfoQuery::Coord(i) => *i,
                InfoQuery::Point(_) => 0,
            };
            children.iter().map(|(_, c)| max_coord(c)).fold(here, usize::max)
        }
        Node::Rand { children, .. } => children.iter().map(|(_, c)| max_coord(c)).max().unwrap_or(0),
        Node::Stop { .. } => 0,
    }
}

fn load_strategy(s: &Settings) -> Result<(Arc<dyn Strategy<Q>>, GridProblem, FiniteRestriction<Q>)> {
    let spec = s.get("strategy").ok_or_else(|| anyhow!("derandomize needs --strategy (built-in name or tree file)"))?;
    if let Some(case) = find_case(spec) {
        let m = s.usize("m")?.unwrap_or(case.m);
        if m < case.m {
            bail!("`{spec}` reads coordinates up to {}; --m {m} is too small", case.m);
        }
        return Ok((case.strategy, make_grid_problem(m)?, case.restriction));
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<String> = verification_suite().into_iter().map(|c| c.name).collect();
        bail!("`{spec}` is neither a file nor a built-in strategy ({})", names.join(", "));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut tree = DecisionTree::<Q>::from_str(&text)?;
    if tree.caps.is_none() {
        tree.caps = Some(tree.worst_case_caps());
    }
    let m = match s.usize("m")? {
        Some(m) => m,
        None => max_coord(&tree.root).max(1),
    };
    let restriction = if tree.rand_alphabet.is_empty() {
        FiniteRestriction::uniform(vec!["u0".into(), "u1".into()])?
    } else {
        FiniteRestriction::uniform(tree.rand_alphabet.clone())?
    };
    Ok((Arc::new(tree), make_grid_problem(m)?, restriction))
}

fn cmd_derandomize(s: &Settings) -> Result<bool> {
    s.mode("rational")?;
    s.problem("grid")?;
    let (strategy, problem, restriction) = load_strategy(s)?;
    let wf = assert_well_formed(strategy.as_ref(), &restriction, &problem, 64)?;
    if !wf.ok() || !wf.caps_verified() {
        return Err(Error::CapsViolated(format!("`{}` has no verified hard caps: {}", strategy.name(), wf.to_json())).into());
    }
    let caps = wf.declared_caps.expect("verified caps are declared");
    let tree = derandomize(strategy.clone(), &restriction, &problem)?;
    let bound = tree.cost_bound().ok_or_else(|| anyhow!("cost bound overflows"))?;
    let mut rows = Vec::new();
    let mut all_equal = true;
    let mut worst = 0usize;
    for f in <GridProblem as Problem<Q>>::test_inputs(&problem)? {
        let (out, cost) = tree.run(&problem, &f)?;
        let expected = expected_output(strategy.as_ref(), &problem, &f, &restriction)?;
        let equal = out == expected;
        all_equal &= equal;
        worst = worst.max(cost);
        rows.push(json!({
            "input": <GridProblem as Problem<Q>>::describe_input(&problem, &f),
            "tree_output": out.to_json(),
            "expected_output": expected.to_json(),
            "equal": equal,
            "card_info": cost,
        }));
    }
    let explicit = tree.materialize(&problem)?;
    let within = worst <= bound;
    let report = json!({
        "strategy": strategy.name(),
        "m": problem.m(),
        "caps": caps,
        "alphabet_size": restriction.alphabet_size(),
        "inputs": rows,
        "all_equal": all_equal,
        "worst_card_info": worst,
        "cost_bound": bound,
        "within_bound": within,
        "passed": all_equal && within,
    });
    match &s.out {
        Some(path) => {
            s.emit(&pretty(&explicit.to_json())?)?;
            let side = sidecar(path, ".report.json");
            fs::write(&side, pretty(&report)?).with_context(|| format!("writing {}", side.display()))?;
        }
        None => s.emit(&pretty(&json!({"tree": explicit.to_json(), "report": report}))?)?,
    }
    eprintln!("card_info {worst} <= {bound}: {within}; outputs equal: {all_equal}");
    Ok(all_equal && within)
}

fn cmd_rates(s: &Settings) -> Result<bool> {
    s.mode("float")?;
    s.problem("lipschitz")?;
    let cells = match s.get("n") {
        Some(spec) => parse_cells(spec)?,
        None => DEFAULT_CELLS.to_vec(),
    };
    let rule: BitsRule = s.get("bits").unwrap_or("log2").parse()?;
    let seeds = match s.get("seeds") {
        Some(spec) => parse_seeds(spec)?,
        None => default_seeds(),
    };
    let family = match s.get("family") {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading family {path}"))?;
            Some(FamilySpec::<f64>::list_from_json(&serde_json::from_str(&text)?)?)
        }
        None => None,
    };
    let rows = rates_sweep(&cells, rule, &seeds, family.as_deref())?;
    let slope = if rows.iter().filter(|r| r.mean_error > 0.0).count() >= 2 {
        Some(fit_loglog_slope(&rows)?)
    } else {
        None
    };
    let mut csv = Vec::new();
    write_rates_csv(&rows, &mut csv)?;
    s.emit(std::str::from_utf8(&csv)?)?;
    let summary = json!({
        "slope": slope,
        "bits": rule.label(),
        "n_cells": cells,
        "seeds": seeds.len(),
        "worst_members": rows.iter().map(|r| r.worst_member.clone()).collect::<Vec<_>>(),
    });
    let line = match slope {
        Some(v) => format!("slope {v:.6}"),
        None => "slope undefined (fewer than two nonzero errors)".to_string(),
    };
    match &s.out {
        Some(path) => {
            let side = sidecar(path, ".slope.json");
            fs::write(&side, pretty(&summary)?).with_context(|| format!("writing {}", side.display()))?;
            println!("{line}");
        }
        None => eprintln!("{line}"),
    }
    Ok(true)
}

fn cmd_bounds(s: &Settings) -> Result<bool> {
    let bound = s.get("bound").ok_or_else(|| anyhow!("bounds needs --bound (thm1, cor2, cor3, kappa)"))?;
    let mut request = s.params.clone();
    request.insert("bound".into(), json!(bound));
    for key in ["n", "k", "q"] {
        if let Some(v) = s.get(key) {
            let parsed: Value = serde_json::from_str(v).map_err(|_| anyhow!("--{key} must be a number, got `{v}`"))?;
            if !parsed.is_number() {
                bail!("--{key} must be a number, got `{v}`");
            }
            request.insert(key.into(), parsed);
        }
    }
    let result = evaluate_request(&Value::Object(request))?;
    s.emit(&pretty(&result)?)?;
    Ok(true)
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(f) => cmd_verify(&Settings::new(f)?),
        Command::Derandomize(f) => cmd_derandomize(&Settings::new(f)?),
        Command::Rates(f) => cmd_rates(&Settings::new(f)?),
        Command::Bounds(f) => cmd_bounds(&Settings::new(f)?),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
