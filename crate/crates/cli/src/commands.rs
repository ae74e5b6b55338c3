use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use linqaoa::exact::{write_spectrum, ExactSolver};
use linqaoa::experiments::{
    fidelity_study, landscape, random_destinations, summarize_transfer, summarize_weighted,
    transfer_batch, weighted_scaling_study, write_fidelity_rows, write_transfer_records,
    write_weighted_rows, DestinationSpec, GridSpec, SweepPair, WeightedStudySpec,
};
use linqaoa::instances::{gen_maxcut, gen_random_ising, gen_regular_ising, gen_weighted_maxcut};
use linqaoa::optimizer::{optimize, GammaAxis, SearchSpec};
use linqaoa::schedule::ParamsDocument;
use linqaoa::simulator::{exact_expectation, run_qaoa};
use linqaoa::{cost_vector, solve_exact, HamiltonianKind, IsingInstance, LinearParams};

use crate::{
    Command, DestArgs, FidelityArgs, GenArgs, KindArg, LandscapeArgs, OptimizeArgs, OutArgs,
    PairArg, ParamArgs, ReplayArgs, SearchArgs, SolveArgs, StudyArgs, TransferArgs, OUT_DIR_ENV,
};

/// Bad flag combinations detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Written next to every result set so the run can be repeated.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: Command,
}

impl OutArgs {
    fn dir(&self) -> Result<PathBuf> {
        let dir = match &self.out {
            Some(p) => p.clone(),
            None => std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from),
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(dir: &Path, command: &Command) -> Result<()> {
    let manifest = Manifest {
        tool: "linqaoa".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.clone(),
    };
    write_string(
        &dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )
}

fn read_instance(path: &Path) -> Result<IsingInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    IsingInstance::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ParamArgs {
    fn resolve(&self) -> Result<Option<LinearParams>> {
        let params =
            if let Some(path) = &self.params {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(
                    ParamsDocument::from_json(&text)
                        .with_context(|| format!("parsing {}", path.display()))?
                        .params,
                )
            } else {
                match (
                    self.gamma_slope,
                    self.gamma_intcp,
                    self.beta_slope,
                    self.beta_intcp,
                ) {
                    (Some(a), Some(b), Some(c), Some(d)) => Some(LinearParams::new(a, b, c, d)?),
                    (None, None, None, None) => None,
                    _ => return Err(usage(
                        "give all four of --gamma-slope --gamma-intcp --beta-slope --beta-intcp",
                    )),
                }
            };
        Ok(if self.half_angle {
            params.map(LinearParams::halved)
        } else {
            params
        })
    }

    fn required(&self) -> Result<LinearParams> {
        self.resolve()?
            .ok_or_else(|| usage("parameters required: --params FILE or the four value flags"))
    }
}

impl SearchArgs {
    fn spec(&self) -> Result<SearchSpec> {
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(usage(format!(
                "--bound must be positive, got {}",
                self.bound
            )));
        }
        let gamma_axis = match &self.log_gamma {
            None => GammaAxis::Linear,
            Some(text) => {
                let (lo, hi) = text
                    .split_once(':')
                    .ok_or_else(|| usage(format!("--log-gamma expects MIN:MAX, got {text:?}")))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| usage(format!("bad number {s:?} in --log-gamma")))
                };
                GammaAxis::SignedLog {
                    min_abs: parse(lo)?,
                    max_abs: parse(hi)?,
                }
            }
        };
        Ok(SearchSpec {
            bounds: [(-self.bound, self.bound); 4],
            budget: self.budget,
            p: self.p,
            shots: self.shots,
            seed: self.seed,
            gamma_axis,
        })
    }
}

fn hamiltonian_kind(kind: KindArg) -> HamiltonianKind {
    match kind {
        KindArg::RandomIsing | KindArg::Regular => HamiltonianKind::RandomIsing,
        KindArg::Maxcut => HamiltonianKind::MaxCut,
        KindArg::WeightedMaxcut => HamiltonianKind::WeightedMaxCut,
    }
}

fn fmt_params(p: &LinearParams) -> String {
    format!(
        "gamma_slope={} gamma_intcp={} beta_slope={} beta_intcp={}",
        p.gamma_slope, p.gamma_intcp, p.beta_slope, p.beta_intcp
    )
}

pub fn run(command: Command) -> Result<()> {
    match &command {
        Command::Gen(a) => gen(a, &command),
        Command::Solve(a) => solve(a),
        Command::Optimize(a) => optimize_cmd(a, &command),
        Command::Landscape(a) => landscape_cmd(a, &command),
        Command::Transfer(a) => transfer(a, &command),
        Command::Fidelity(a) => fidelity(a, &command),
        Command::Study(a) => study(a, &command),
        Command::Replay(a) => replay(a),
    }
}

fn gen(a: &GenArgs, command: &Command) -> Result<()> {
    let density = || {
        a.d_edges
            .ok_or_else(|| usage("--d-edges is required for this kind"))
    };
    let inst = match a.kind {
        KindArg::RandomIsing => gen_random_ising(a.n, density()?, a.seed)?,
        KindArg::Maxcut => gen_maxcut(a.n, density()?, a.seed)?,
        KindArg::WeightedMaxcut => gen_weighted_maxcut(a.n, density()?, a.w, a.seed)?,
        KindArg::Regular => {
            let degree = a
                .degree
                .ok_or_else(|| usage("--degree is required for regular"))?;
            gen_regular_ising(a.n, degree, a.seed)?
        }
    };
    if a.name.contains(['/', '\\']) {
        return Err(usage("--name must be a plain file name"));
    }
    let dir = a.out.dir()?;
    let path = dir.join(&a.name);
    write_string(&path, &(inst.to_json() + "\n"))?;
    write_manifest(&dir, command)?;
    println!(
        "{} edges={} d_edges={}",
        path.display(),
        inst.num_edges(),
        inst.edge_density()
    );
    Ok(())
}

fn solve(a: &SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let sol = ExactSolver::default().solve(&inst)?;
    println!("e_min={} degeneracy={}", sol.e_min, sol.degeneracy);
    if let Some(path) = &a.spectrum {
        let mut out = create(path)?;
        write_spectrum(&cost_vector(&inst)?, &mut out)?;
        out.flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OptimizeSummary {
    best_value: f64,
    exact_expectation: f64,
    e_exact: f64,
    ratio: f64,
    params: LinearParams,
}

fn optimize_cmd(a: &OptimizeArgs, command: &Command) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let spec = a.search.spec()?;
    let exact = solve_exact(&inst)?;
    let trace = optimize(&inst, &spec)?;
    let costs = cost_vector(&inst)?;
    let state = run_qaoa(&inst, &trace.best_params.materialize(spec.p)?)?;
    let expectation = exact_expectation(&state, &costs)?;
    let ratio = exact.ratio(expectation)?;

    let dir = a.out.dir()?;
    let doc = ParamsDocument {
        label: Some(format!("optimized p={} seed={}", spec.p, spec.seed)),
        params: trace.best_params,
    };
    write_string(&dir.join("params.json"), &(doc.to_json() + "\n"))?;
    write_string(&dir.join("trace.tsv"), &trace.to_table())?;
    let summary = OptimizeSummary {
        best_value: trace.best_value,
        exact_expectation: expectation,
        e_exact: exact.e_min,
        ratio,
        params: trace.best_params,
    };
    write_string(
        &dir.join("summary.json"),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    write_manifest(&dir, command)?;
    println!(
        "best_value={} ratio={} {}",
        trace.best_value,
        ratio,
        fmt_params(&trace.best_params)
    );
    Ok(())
}

fn landscape_cmd(a: &LandscapeArgs, command: &Command) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let fixed = a
        .params
        .resolve()?
        .unwrap_or_else(|| LinearParams::ISING_N16_D060.halved());
    let pair = match a.pair {
        PairArg::Gamma => SweepPair::Gamma,
        PairArg::Beta => SweepPair::Beta,
    };
    let grid = landscape(
        &inst,
        a.p,
        pair,
        fixed,
        &GridSpec::square(a.lo, a.hi, a.res),
    )?;
    let dir = a.out.dir()?;
    let mut out = create(&dir.join("landscape.txt"))?;
    grid.write_text(&mut out)?;
    out.flush()?;
    write_manifest(&dir, command)?;
    let (r, c, v) = grid.argmin();
    println!(
        "min={} at {}={} {}={}",
        v,
        grid.slope_name(),
        grid.slope_values[c],
        grid.intercept_name(),
        grid.intercept_values[r]
    );
    Ok(())
}

fn destinations(d: &DestArgs, seed: u64) -> Result<Vec<IsingInstance>> {
    if d.kind == KindArg::Regular {
        return Err(usage(
            "regular destinations are not supported; use --kind random-ising",
        ));
    }
    let spec = DestinationSpec {
        kind: hamiltonian_kind(d.kind),
        n: d.n,
        d_min: d.d_min,
        d_max: d.d_max,
        w: d.w,
    };
    Ok(random_destinations(&spec, d.count, seed)?)
}

fn transfer(a: &TransferArgs, command: &Command) -> Result<()> {
    let params = a.params.required()?;
    let dests = destinations(&a.dest, a.seed)?;
    let results = transfer_batch(&params, a.p, &dests, a.shots, a.seed)?;
    let dir = a.out.dir()?;
    let mut out = create(&dir.join("transfer.jsonl"))?;
    write_transfer_records(&results, &mut out)?;
    out.flush()?;
    if a.histograms {
        let mut out = create(&dir.join("histograms.jsonl"))?;
        for r in results.iter().flatten() {
            if let Some(h) = &r.histogram {
                writeln!(out, "{}", serde_json::to_string(h)?)?;
            }
        }
        out.flush()?;
    }
    let summary = summarize_transfer(&results);
    write_string(
        &dir.join("summary.json"),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    write_manifest(&dir, command)?;
    println!(
        "count={} failed={} min_ratio={} mean_ratio={} max_ratio={} solvable_fraction={}",
        summary.count,
        summary.failed,
        summary.min_ratio,
        summary.mean_ratio,
        summary.max_ratio,
        summary.solvable_fraction
    );
    Ok(())
}

fn fidelity(a: &FidelityArgs, command: &Command) -> Result<()> {
    let source = read_instance(&a.source)?;
    let params = a.params.required()?;
    let spec = DestinationSpec {
        kind: source.kind(),
        n: source.n_qubits(),
        d_min: a.d_min,
        d_max: a.d_max,
        w: source.scale_w(),
    };
    let dests = random_destinations(&spec, a.count, a.seed)?;
    let study = fidelity_study(&source, &params, &dests, a.p)?;
    let dir = a.out.dir()?;
    let mut out = create(&dir.join("fidelity.csv"))?;
    write_fidelity_rows(&study, &mut out)?;
    out.flush()?;
    write_manifest(&dir, command)?;
    let better = study
        .destinations
        .iter()
        .filter(|r| r.ratio > study.source.ratio)
        .count();
    println!(
        "source_ratio={} destinations={} above_source={}",
        study.source.ratio,
        study.destinations.len(),
        better
    );
    Ok(())
}

fn study(a: &StudyArgs, command: &Command) -> Result<()> {
    let spec = WeightedStudySpec {
        n_range: (a.n_min, a.n_max),
        d_range: (a.d_min, a.d_max),
        w_values: a.w.clone(),
        per_cell_count: a.per_w,
        search: a.search.spec()?,
        seed: a.search.seed,
    };
    let rows = weighted_scaling_study(&spec)?;
    let summary = summarize_weighted(&rows);
    let dir = a.out.dir()?;
    let mut out = create(&dir.join("study.csv"))?;
    write_weighted_rows(&rows, &mut out)?;
    out.flush()?;
    write_string(
        &dir.join("summary.json"),
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    write_manifest(&dir, command)?;
    for l in &summary.levels {
        println!(
            "w={} count={} median_abs_gamma_slope={} median_abs_gamma_intcp={} above_0.8={}",
            l.w, l.count, l.median_abs[0], l.median_abs[1], l.fraction_above_threshold
        );
    }
    Ok(())
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let text = fs::read_to_string(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(linqaoa::Error::from)
        .with_context(|| format!("parsing {}", a.manifest.display()))?;
    let mut command = manifest.command;
    let out = a.out.clone();
    match &mut command {
        Command::Gen(c) => c.out = out,
        Command::Optimize(c) => c.out = out,
        Command::Landscape(c) => c.out = out,
        Command::Transfer(c) => c.out = out,
        Command::Fidelity(c) => c.out = out,
        Command::Study(c) => c.out = out,
        Command::Solve(_) => {}
        Command::Replay(_) => return Err(usage("a manifest cannot record a replay")),
    }
    run(command)
}
