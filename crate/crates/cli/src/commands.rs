//! Argument definitions and command dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddsys_core::ct::{reconstruct_from_data, DEFAULT_K_MAX};
use ddsys_core::hankel::{is_persistently_exciting, DataSet};
use ddsys_core::linalg::eigenvalues;
use ddsys_core::lti::random::{rng, uniform};
use ddsys_core::lti::RelDeg;
use ddsys_core::reldeg::{
    certificate_holds, reldeg_informativity_data, reldeg_pe, reldeg_sharp, vecreldeg_informativity,
    vecreldeg_pe, VecRelDegKind,
};
use ddsys_core::signal::{impulse_input, pe_binary_input, prbs, simulate_trajectory};
use ddsys_core::zerodyn::{algorithm2, zd_stability_pe, ZdSign};
use ddsys_core::{Matrix, Stability, ToleranceConfig, Vector};

use crate::io::{emit, ingest, read_system, AnySystem, DataFormat, SystemJson};
use crate::report::{AnalysisReport, Condition, PePath, VecPePath, Verdict};
use crate::{verify, CliError, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK};

#[derive(Debug, Parser)]
#[command(
    name = "ddsys",
    version,
    about = "Data-driven relative degree and zero-dynamics analysis"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Json,
}

impl From<FileFormat> for DataFormat {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => DataFormat::Csv,
            FileFormat::Json => DataFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rank_rtol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub membership_rtol: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub stability_margin: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub match_atol: f64,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

impl GlobalOpts {
    fn tolerances(&self) -> Result<ToleranceConfig, CliError> {
        let t = ToleranceConfig {
            rank_rtol: self.rank_rtol,
            membership_rtol: self.membership_rtol,
            stability_margin: self.stability_margin,
            match_atol: self.match_atol,
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file (`.csv` or JSON).
    pub data: PathBuf,
    /// Overrides the format guessed from the extension.
    #[arg(long, value_enum)]
    pub data_format: Option<FileFormat>,
    /// Sampling time attached to the data (overrides the JSON field).
    #[arg(long)]
    pub sampling_time: Option<f64>,
}

impl DataArgs {
    fn load(&self) -> Result<DataSet, CliError> {
        load(&self.data, self.data_format, self.sampling_time)
    }
}

fn load(path: &Path, fmt: Option<FileFormat>, h: Option<f64>) -> Result<DataSet, CliError> {
    let fmt = fmt.map_or_else(|| DataFormat::from_path(path), Into::into);
    ingest(path, fmt, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Impulse,
    Pe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialState {
    Zero,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Reldeg,
    Zerodyn,
    Ct,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SISO relative degree.
    Reldeg {
        #[command(flatten)]
        data: DataArgs,
        /// Upper bound on the lag of the data-generating system.
        #[arg(long)]
        lag: usize,
        /// State dimension; enables the persistency-of-excitation path.
        #[arg(long)]
        order: Option<usize>,
        /// Window length for the persistency-of-excitation path (default lag + order + 1).
        #[arg(long)]
        window: Option<usize>,
    },
    /// Vector relative degree and decoupling matrix.
    Vecreldeg {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        lag: usize,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Stability of the zero dynamics.
    Zerodyn {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        lag: usize,
        #[arg(long)]
        order: usize,
        /// Sum of the vector relative degree.
        #[arg(long)]
        reldeg_sum: usize,
        /// Full vector relative degree (comma separated); enables the persistency-of-excitation path.
        #[arg(long, value_delimiter = ',')]
        reldeg: Option<Vec<usize>>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Continuous-time model from data sampled at three rates.
    Reconstruct {
        /// Three dataset files, one per sampling time.
        #[arg(num_args = 3, required = true)]
        data: Vec<PathBuf>,
        #[arg(long, value_enum)]
        data_format: Option<FileFormat>,
        /// One lag for all rates or three comma-separated lags.
        #[arg(long, value_delimiter = ',', required = true)]
        lag: Vec<usize>,
        #[arg(long)]
        order: usize,
        /// Sampling times, when the data files do not carry them.
        #[arg(long, value_delimiter = ',')]
        sampling_times: Option<Vec<f64>>,
        /// Largest logarithm branch index searched.
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: usize,
    },
    /// Persistency of excitation of the input.
    CheckPe {
        #[command(flatten)]
        data: DataArgs,
        /// Order L of the test.
        #[arg(long)]
        window: usize,
    },
    /// Simulate a system and write a dataset.
    Simulate {
        /// System JSON file.
        #[arg(long)]
        system: PathBuf,
        /// Samples per sequence.
        #[arg(long)]
        len: usize,
        #[arg(long, value_enum, default_value_t = InputKind::Pe)]
        input: InputKind,
        /// Input channel of the impulse (1-based).
        #[arg(long, default_value_t = 1)]
        channel: usize,
        /// Sample index of the impulse.
        #[arg(long, default_value_t = 0)]
        at: usize,
        /// Resample the +-1 input until it is persistently exciting of this order.
        #[arg(long)]
        pe_order: Option<usize>,
        #[arg(long, default_value_t = 1)]
        sequences: usize,
        #[arg(long, value_enum, default_value_t = InitialState::Zero)]
        x0: InitialState,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Required for continuous systems (zero-order hold).
        #[arg(long)]
        sampling_time: Option<f64>,
        /// Destination; the dataset goes to stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        data_format: Option<FileFormat>,
    },
    /// Monte-Carlo comparison of the data-driven procedures with model oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Trials per suite (defaults: reldeg 200, zerodyn 100, ct 50).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub exit: i32,
    pub report: Option<AnalysisReport>,
}

fn finish(report: AnalysisReport, exit: i32, fmt: ReportFormat) -> Outcome {
    let stdout = match fmt {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Text => report.to_text(),
    };
    Outcome {
        stdout,
        exit,
        report: Some(report),
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn stability_name(s: Stability) -> String {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Boundary => "boundary",
    }
    .into()
}

fn pe_condition(
    ds: &DataSet,
    order: usize,
    tol: &ToleranceConfig,
) -> Result<(bool, Condition), CliError> {
    let pe = is_persistently_exciting(ds, order, tol)?;
    Ok((
        pe,
        Condition::new(format!("input persistently exciting of order {order}"), pe),
    ))
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = cli.global.tolerances()?;
    let fmt = cli.global.format;
    match &cli.command {
        Command::Reldeg {
            data,
            lag,
            order,
            window,
        } => {
            let ds = data.load()?;
            let v = reldeg_informativity_data(&ds, *lag, &tol)?;
            let informative = v.r().is_some();
            let mut conditions = vec![Condition::new(
                "data determine the relative degree of every explaining system",
                informative,
            )];
            if informative {
                conditions.push(Condition::new(
                    "certificate trajectory lies in the most powerful unfalsified model",
                    certificate_holds(&ds, *lag, &v, &tol)?,
                ));
            }
            let mut warnings = Vec::new();
            let mut pe_path = None;
            if let Some(n) = *order {
                let w = window.unwrap_or(lag + n + 1);
                let (pe, c) = pe_condition(&ds, w + n, &tol)?;
                conditions.push(c);
                if pe {
                    let r = match reldeg_pe(&ds, *lag, n, w, &tol)? {
                        RelDeg::Finite(r) => Some(r),
                        RelDeg::Infinite => None,
                    };
                    pe_path = Some(PePath {
                        window: w,
                        r,
                        sharp: reldeg_sharp(&ds, *lag, w, &tol)?,
                    });
                } else {
                    warnings.push("persistency-of-excitation path skipped".into());
                }
            }
            let mut rep = AnalysisReport::new(
                "reldeg",
                Verdict::Reldeg {
                    informative,
                    r: v.r(),
                    witness: v.witness(),
                    pe_path,
                },
                &tol,
            );
            rep.conditions = conditions;
            rep.warnings = warnings;
            Ok(finish(
                rep,
                if informative {
                    EXIT_OK
                } else {
                    EXIT_INCONCLUSIVE
                },
                fmt,
            ))
        }
        Command::Vecreldeg {
            data,
            lag,
            order,
            window,
        } => {
            let ds = data.load()?;
            let v = vecreldeg_informativity(&ds, *lag, &tol)?;
            let kind = match v.kind {
                VecRelDegKind::Full => "full",
                VecRelDegKind::DecouplingOnly => "decoupling_only",
                VecRelDegKind::NotInformative => "not_informative",
            };
            let mut unidentified = Vec::new();
            for (i, row) in v.identified_mask.iter().enumerate() {
                for (j, &known) in row.iter().enumerate() {
                    if !known {
                        unidentified.push([i + 1, j + 1]);
                    }
                }
            }
            let mut conditions = vec![
                Condition::new(
                    "relative degree of every output determined",
                    v.r.iter().all(Option::is_some),
                ),
                Condition::new(
                    "decoupling matrix invertible for every explaining system",
                    v.kind == VecRelDegKind::Full,
                ),
            ];
            let mut warnings = Vec::new();
            if !unidentified.is_empty() && v.kind == VecRelDegKind::Full {
                warnings.push("some decoupling entries are not determined; invertibility holds for all of their values".into());
            }
            let mut pe_path = None;
            if let Some(n) = *order {
                let w = window.unwrap_or(lag + n + 1);
                let (pe, c) = pe_condition(&ds, w + n, &tol)?;
                conditions.push(c);
                if pe {
                    let res = vecreldeg_pe(&ds, *lag, n, w, &tol)?;
                    pe_path = Some(VecPePath {
                        window: w,
                        r: res.as_ref().map(|(r, _)| r.clone()),
                        g: res.as_ref().map(|(_, g)| rows(g)),
                    });
                } else {
                    warnings.push("persistency-of-excitation path skipped".into());
                }
            }
            let mut rep = AnalysisReport::new(
                "vecreldeg",
                Verdict::Vecreldeg {
                    kind: kind.into(),
                    r: v.r.clone(),
                    g: rows(&v.g),
                    identified: v.identified_mask.clone(),
                    unidentified,
                    pe_path,
                },
                &tol,
            );
            rep.conditions = conditions;
            rep.warnings = warnings;
            let exit = if v.kind == VecRelDegKind::Full {
                EXIT_OK
            } else {
                EXIT_INCONCLUSIVE
            };
            Ok(finish(rep, exit, fmt))
        }
        Command::Zerodyn {
            data,
            lag,
            order,
            reldeg_sum,
            reldeg,
            window,
        } => {
            let ds = data.load()?;
            let v = algorithm2(&ds, *lag, *order, *reldeg_sum, &tol)?;
            let c = v.conditions;
            let mut warnings = Vec::new();
            if c.mpum_zd_stable == Stability::Boundary {
                warnings.push(
                    "zero-dynamics spectrum lies within the stability margin of the unit circle"
                        .into(),
                );
            }
            let mut conditions = vec![
                Condition::new(
                    format!("(a) data determine a system of McMillan degree {order}"),
                    c.mcmillan_ok,
                ),
                Condition::new(
                    format!("(b) data certify a vector relative degree summing to {reldeg_sum}"),
                    c.reldeg_sum_ok,
                ),
                Condition::new(
                    "(c) zero dynamics of the most powerful unfalsified model are stable",
                    c.mpum_zd_stable == Stability::Stable,
                ),
            ];
            let mut pe_stability = None;
            if let Some(r) = reldeg {
                let w = window.unwrap_or(lag + r.iter().max().copied().unwrap_or(0) + 1);
                let (pe, cond) = pe_condition(&ds, w + order, &tol)?;
                conditions.push(cond);
                if pe {
                    pe_stability = Some(stability_name(zd_stability_pe(
                        &ds, *lag, *order, r, w, &tol,
                    )?));
                } else {
                    warnings.push("persistency-of-excitation path skipped".into());
                }
            }
            let spectrum = v
                .spectrum
                .as_ref()
                .map(|s| s.iter().map(|z| [z.re, z.im]).collect());
            let mut rep = AnalysisReport::new(
                "zerodyn",
                Verdict::Zerodyn {
                    s: v.s.as_i8(),
                    q_tilde: v.q_tilde.as_ref().map(rows),
                    spectrum,
                    pe_stability,
                },
                &tol,
            );
            rep.conditions = conditions;
            rep.warnings = warnings;
            let exit = if v.s == ZdSign::Inconclusive {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            Ok(finish(rep, exit, fmt))
        }
        Command::Reconstruct {
            data,
            data_format,
            lag,
            order,
            sampling_times,
            kmax,
        } => {
            let lags: [usize; 3] = match lag.as_slice() {
                [l] => [*l; 3],
                [a, b, c] => [*a, *b, *c],
                _ => return Err(CliError::Usage("--lag takes one value or three".into())),
            };
            let hs: [Option<f64>; 3] = match sampling_times.as_deref() {
                None => [None; 3],
                Some([a, b, c]) => [Some(*a), Some(*b), Some(*c)],
                Some(_) => {
                    return Err(CliError::Usage(
                        "--sampling-times takes three values".into(),
                    ))
                }
            };
            let mut sets = Vec::with_capacity(3);
            for (p, h) in data.iter().zip(hs) {
                sets.push(load(p, *data_format, h)?);
            }
            let sys = reconstruct_from_data(
                [&sets[0], &sets[1], &sets[2]],
                lags,
                [*order; 3],
                *kmax,
                &tol,
            )?;
            let times = [0, 1, 2].map(|i| sets[i].sampling_time().unwrap_or(f64::NAN));
            let mut rep = AnalysisReport::new(
                "reconstruct",
                Verdict::Reconstruct {
                    system: SystemJson::from_continuous(&sys),
                    eigenvalues: eigenvalues(&sys.a)?.iter().map(|z| [z.re, z.im]).collect(),
                    sampling_times: times,
                    k_max: *kmax,
                },
                &tol,
            );
            rep.conditions = vec![Condition::new(
                "Markov parameters agree across the three rates",
                true,
            )];
            rep.warnings = vec![
                "reciprocal sampling times are assumed rationally independent; this is not checked"
                    .into(),
            ];
            Ok(finish(rep, EXIT_OK, fmt))
        }
        Command::CheckPe { data, window } => {
            let ds = data.load()?;
            let (pe, c) = pe_condition(&ds, *window, &tol)?;
            let mut rep = AnalysisReport::new(
                "check-pe",
                Verdict::CheckPe {
                    pe,
                    window: *window,
                },
                &tol,
            );
            rep.conditions.push(c);
            Ok(finish(
                rep,
                if pe { EXIT_OK } else { EXIT_INCONCLUSIVE },
                fmt,
            ))
        }
        Command::Simulate {
            system,
            len,
            input,
            channel,
            at,
            pe_order,
            sequences,
            x0,
            seed,
            sampling_time,
            output,
            data_format,
        } => {
            let (sys, h) = match read_system(system)? {
                AnySystem::Discrete(s) => (s, *sampling_time),
                AnySystem::Continuous(s) => {
                    let h = sampling_time.ok_or_else(|| {
                        CliError::Usage("continuous systems need --sampling-time".into())
                    })?;
                    (s.zoh_discretize(h)?, Some(h))
                }
            };
            if *sequences == 0 {
                return Err(CliError::Usage("--sequences must be positive".into()));
            }
            let mut seqs = Vec::with_capacity(*sequences);
            for k in 0..*sequences as u64 {
                let s = seed.wrapping_add(k);
                let u = match input {
                    InputKind::Impulse => {
                        if *channel == 0 {
                            return Err(CliError::Usage("--channel is 1-based".into()));
                        }
                        impulse_input(sys.m(), *len, channel - 1, *at)?
                    }
                    InputKind::Pe => match pe_order {
                        Some(o) => pe_binary_input(sys.m(), *len, *o, s, &tol)?,
                        None => prbs(sys.m(), *len, s),
                    },
                };
                let x = match x0 {
                    InitialState::Zero => Vector::zeros(sys.n()),
                    InitialState::Random => {
                        let mut g = rng(s ^ 0x5eed);
                        Vector::from_fn(sys.n(), |_, _| uniform(&mut g, -1.0, 1.0))
                    }
                };
                seqs.push(simulate_trajectory(&sys, &x, &u)?);
            }
            let ds = DataSet::new(sys.m(), sys.p(), seqs, h)?;
            let dfmt = match (data_format, output) {
                (Some(f), _) => (*f).into(),
                (None, Some(p)) => DataFormat::from_path(p),
                (None, None) => DataFormat::Json,
            };
            let text = emit(&ds, dfmt)?;
            match output {
                None => Ok(Outcome {
                    stdout: if text.ends_with('\n') {
                        text
                    } else {
                        text + "\n"
                    },
                    exit: EXIT_OK,
                    report: None,
                }),
                Some(p) => {
                    std::fs::write(p, text)
                        .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                    let rep = AnalysisReport::new(
                        "simulate",
                        Verdict::Simulate {
                            sequences: *sequences,
                            samples: *len,
                            output: Some(p.display().to_string()),
                        },
                        &tol,
                    );
                    Ok(finish(rep, EXIT_OK, fmt))
                }
            }
        }
        Command::Verify {
            suite,
            trials,
            seed,
        } => {
            let mut runs = Vec::new();
            let run = |s: Suite| *suite == Suite::All || *suite == s;
            if run(Suite::Reldeg) {
                runs.push(verify::reldeg_suite(trials.unwrap_or(200), *seed, &tol));
            }
            if run(Suite::Zerodyn) {
                runs.push(verify::zerodyn_suite(trials.unwrap_or(100), *seed, &tol));
            }
            if run(Suite::Ct) {
                let n = trials.unwrap_or(50);
                runs.push(verify::ct_suite(n, *seed, &tol));
                runs.push(verify::ct_mismatch_suite(n.min(10), *seed, &tol));
            }
            let counts: Vec<_> = runs.iter().map(|r| r.count.clone()).collect();
            let warnings = runs
                .iter()
                .flat_map(|r| {
                    r.failures
                        .iter()
                        .map(move |f| format!("{}: {f}", r.count.suite))
                })
                .collect();
            let ok = counts.iter().all(|c| c.ok());
            let mut rep = AnalysisReport::new(
                "verify",
                Verdict::Verify {
                    suites: counts.clone(),
                },
                &tol,
            );
            rep.conditions = counts
                .iter()
                .map(|c| {
                    Condition::new(
                        format!(
                            "{}: {}/{} agree with the oracle, {} unsound of {} degraded verdicts",
                            c.suite, c.passed, c.total, c.unsound, c.degraded_checked
                        ),
                        c.ok(),
                    )
                })
                .collect();
            rep.warnings = warnings;
            Ok(finish(rep, if ok { EXIT_OK } else { EXIT_ERROR }, fmt))
        }
    }
}
