use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gcf_core::diagnostics::{quantity_report, roundness, write_quantity_report, DiagnosticsRecord};
use gcf_core::flow::{self, CsvRecordSink, FlowError, FlowState, RecordSink, StopReason, StopRule};
use gcf_core::geometry::snapshot::{read_snapshot, write_snapshot};
use gcf_core::lemma_q::{min_search, write_report};
use gcf_core::soliton::{solve, write_solver_report};
use gcf_core::{AxisymBody, ConvexBody, CurveBody, DiagnosticBody};
use log::{info, warn};

use crate::config::{Backend, ExperimentConfig, Shape};
use crate::error::{io_at, CliError};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| io_at(path)(e.into())
}

fn save_snapshot<B: ConvexBody>(body: &B, path: &Path) -> Result<(), CliError> {
    write_snapshot(body, create(path)?).map_err(|source| CliError::Snapshot {
        path: path.to_path_buf(),
        source,
    })
}

fn note_analog(backend: Backend) {
    if backend == Backend::Curve {
        info!("curve backend (n = 1): results are a planar analog of the surface flow");
    }
}

/// Writes the record CSV and the periodic snapshots of a flow.
struct FlowSink<'a> {
    records: Option<CsvRecordSink<BufWriter<File>>>,
    cfg: &'a ExperimentConfig,
    last_snapshot: Option<usize>,
}

impl<B: ConvexBody> RecordSink<B> for FlowSink<'_> {
    fn emit(&mut self, state: &FlowState<B>, record: &DiagnosticsRecord) -> io::Result<()> {
        if let Some(r) = &mut self.records {
            RecordSink::<B>::emit(r, state, record)?;
        }
        if let Some(every) = self.cfg.outputs.snapshot_every {
            if state.step % every == 0 {
                self.snapshot(&state.body, state.step)?;
            }
        }
        info!(
            "step {} t = {:.6e} roundness = {:.6e} residual = {:.3e}",
            record.step, record.t, record.roundness, record.soliton_residual
        );
        Ok(())
    }
}

impl FlowSink<'_> {
    fn snapshot<B: ConvexBody>(&mut self, body: &B, step: usize) -> io::Result<()> {
        if let Some(path) = self.cfg.outputs.snapshot_at(step) {
            let file = BufWriter::new(File::create(&path)?);
            write_snapshot(body, file).map_err(io::Error::other)?;
            self.last_snapshot = Some(step);
        }
        Ok(())
    }
}

pub fn flow(cfg: &ExperimentConfig) -> Result<(), CliError> {
    note_analog(cfg.backend);
    match cfg.backend {
        Backend::Curve => flow_with::<CurveBody>(cfg),
        Backend::Axisym => flow_with::<AxisymBody>(cfg),
    }
}

fn flow_with<B: Shape>(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let body: B = cfg.initial_body()?;
    let config = cfg.flow_config();
    let records = match &cfg.outputs.records_path {
        Some(p) => Some(CsvRecordSink::new(create(p)?).map_err(io_at(p))?),
        None => None,
    };
    let mut sink = FlowSink {
        records,
        cfg,
        last_snapshot: None,
    };
    let result = flow::run(body, &config, &mut sink);
    let (state, outcome) = match result {
        Ok(o) => (o.state, Ok(o.reason)),
        Err(f) => (f.state, Err(f.error)),
    };
    // The final (or last accepted) state is always kept.
    if sink.last_snapshot != Some(state.step) {
        sink.snapshot(&state.body, state.step).map_err(|e| {
            io_at(cfg.outputs.snapshot_at(state.step).unwrap_or_default())(e)
        })?;
    }
    if let Some(r) = &mut sink.records {
        let path = cfg.outputs.records_path.clone().unwrap_or_default();
        r.flush().map_err(io_at(path))?;
    }
    match outcome {
        Ok(StopReason::RuleSatisfied) => {
            info!("stop rule met at step {} (t = {:e})", state.step, state.t);
            Ok(())
        }
        Ok(StopReason::MaxSteps) if config.stop == StopRule::None => Ok(()),
        Ok(StopReason::MaxSteps) => Err(CliError::FlowNotConverged {
            max_steps: config.max_steps,
            t: state.t,
        }),
        Err(FlowError::Sink(e)) => Err(CliError::Io {
            path: cfg.outputs.records_path.clone().unwrap_or_default(),
            source: e,
        }),
        Err(e) => Err(CliError::Flow(e)),
    }
}

pub fn soliton(cfg: &ExperimentConfig) -> Result<(), CliError> {
    note_analog(cfg.backend);
    match cfg.backend {
        Backend::Curve => soliton_with::<CurveBody>(cfg),
        Backend::Axisym => soliton_with::<AxisymBody>(cfg),
    }
}

fn soliton_with<B: Shape>(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let body: B = cfg.initial_body()?;
    let result = solve(&body, cfg.alpha, &cfg.solve_options());
    let history = match &result {
        Ok(sol) => sol.history.as_slice(),
        Err(e) => e.history(),
    };
    if let Some(p) = &cfg.outputs.report_path {
        write_solver_report(history, create(p)?).map_err(csv_err(p))?;
    }
    match result {
        Ok(sol) => {
            let iters = sol.history.len().saturating_sub(1);
            info!(
                "converged in {iters} iterations, residual {:e}, roundness - 1 = {:e}",
                sol.residual,
                roundness(&sol.body) - 1.0
            );
            if let Some(p) = cfg.outputs.snapshot_at(iters) {
                save_snapshot(&sol.body, &p)?;
            }
            Ok(())
        }
        Err(e) => Err(CliError::Solve(e)),
    }
}

pub fn diagnose(snapshot: &Path, alpha: f64, backend: Backend, out: Option<&Path>) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(CliError::Argument(format!("alpha must be positive, got {alpha}")));
    }
    note_analog(backend);
    match backend {
        Backend::Curve => diagnose_with::<CurveBody>(snapshot, alpha, out),
        Backend::Axisym => diagnose_with::<AxisymBody>(snapshot, alpha, out),
    }
}

fn diagnose_with<B: DiagnosticBody>(snapshot: &Path, alpha: f64, out: Option<&Path>) -> Result<(), CliError> {
    let file = File::open(snapshot).map_err(io_at(snapshot))?;
    let body: B = read_snapshot(io::BufReader::new(file)).map_err(|source| CliError::Snapshot {
        path: snapshot.to_path_buf(),
        source,
    })?;
    let rows = quantity_report(&body, alpha);
    match out {
        Some(p) => write_quantity_report(&rows, create(p)?).map_err(csv_err(p)),
        None => {
            let stdout = io::stdout().lock();
            write_quantity_report(&rows, stdout).map_err(csv_err(Path::new("<stdout>")))
        }
    }
}

pub struct LemmaArgs {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub refine: bool,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
}

pub fn lemma_q(args: &LemmaArgs) -> Result<(), CliError> {
    if args.alphas.is_empty() {
        return Err(CliError::Argument("at least one alpha is required".into()));
    }
    let mut results = Vec::with_capacity(args.alphas.len());
    for &alpha in &args.alphas {
        let r = min_search(args.n, alpha, args.trials, args.seed, args.refine)?;
        info!(
            "n = {} alpha = {alpha}: min Q = {:e} (scale {:e}, raw samples {:e})",
            args.n, r.min_q, r.scale, r.sample_min
        );
        results.push(r);
    }
    match &args.out {
        Some(p) => write_report(&results, create(p)?).map_err(csv_err(p))?,
        None => {
            let mut stdout = io::stdout().lock();
            write_report(&results, &mut stdout).map_err(csv_err(Path::new("<stdout>")))?;
            stdout.flush().map_err(io_at("<stdout>"))?;
        }
    }
    let worst = results
        .iter()
        .filter(|r| r.min_q < -args.tolerance * r.scale)
        .min_by(|a, b| (a.min_q / a.scale).total_cmp(&(b.min_q / b.scale)));
    if let Some(r) = worst {
        warn!("candidate violation kept in the report for inspection");
        return Err(CliError::LemmaViolation {
            n: args.n,
            alpha: r.argmin.alpha(),
            min_q: r.min_q,
            scale: r.scale,
            tolerance: args.tolerance,
        });
    }
    Ok(())
}
