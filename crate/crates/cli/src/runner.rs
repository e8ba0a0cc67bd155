//! Executes a loaded config and persists its reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rclt_core::sampling::sample_trajectory_stream;
use rclt_core::spectral::{symmetric_eigen, SpectralMeasure, VarianceReport};
use rclt_core::{
    clt_test, decompose_trajectory, fclt_profile, maximal_inequality_check, spectral_measure,
    uniform_integrability_diagnostic, variance_report_with, Decomposer, LimitReport, MaximalMethod,
};
use serde::Serialize;

use crate::config::{Command, LoadedConfig};
use crate::error::{CliError, Result};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandRecord {
    pub command: String,
    pub files: Vec<String>,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub commands: Vec<CommandRecord>,
    pub total_seconds: f64,
}

impl RunManifest {
    /// False when any statistical acceptance check failed.
    pub fn passed(&self) -> bool {
        self.commands.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

#[derive(Serialize)]
struct SpectrumBody {
    n_states: usize,
    stationary: Vec<f64>,
    eigenvalues: Vec<f64>,
    absolute_spectral_gap: f64,
    spectral_measure: SpectralMeasure,
}

#[derive(Serialize)]
struct VarianceBody {
    #[serde(flatten)]
    report: VarianceReport,
    identity_residual: f64,
    max_pairwise_gap: f64,
}

#[derive(Serialize)]
struct TrajectorySummary {
    stream: u64,
    max_residual_xk1: f64,
    max_residual_martdec: f64,
    certified: bool,
    csv: String,
}

#[derive(Serialize)]
struct DecomposeBody {
    n: usize,
    length: usize,
    cesaro_certificate: f64,
    limit_certificate: f64,
    limit_second_moment: f64,
    l2_distance_to_limit: f64,
    trajectories: Vec<TrajectorySummary>,
    passed: bool,
}

/// Files written so far; removed again if the run fails.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn open(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<String> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })?;
        Ok(name.to_string())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<String> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
        let mut buf = Vec::new();
        writeln!(buf, "# schema={SCHEMA}").expect("in-memory write");
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).expect("in-memory write");
            for row in rows {
                w.write_record(row).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        self.write(name, &buf)
    }

    fn discard(self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Shortest round-trip form, with an exponent for very small or large values.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Output file stem: the command name, suffixed when it repeats.
fn stem(name: &str, occurrence: usize) -> String {
    if occurrence == 0 {
        name.to_string()
    } else {
        format!("{name}-{}", occurrence + 1)
    }
}

/// Run every command in the fixed order spectrum, variance, decompose,
/// clt, fclt, maximal, ui-diagnostic, then write `manifest.json`.
///
/// A module error removes everything this run wrote. A failed statistical
/// check keeps the outputs and shows up as `passed: false`.
pub fn run(loaded: &LoadedConfig) -> Result<RunManifest> {
    run_selected(loaded, |_| true)
}

/// Like [`run`] but only for commands accepted by `select`.
pub fn run_selected(
    loaded: &LoadedConfig,
    select: impl Fn(&Command) -> bool,
) -> Result<RunManifest> {
    let mut commands: Vec<&Command> = loaded
        .config
        .commands
        .iter()
        .filter(|c| select(c))
        .collect();
    commands.sort_by_key(|c| c.rank());

    let mut out = Outputs::open(&loaded.output_dir)?;
    let result = execute(loaded, &commands, &mut out);
    match result {
        Ok(manifest) => Ok(manifest),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn execute(loaded: &LoadedConfig, commands: &[&Command], out: &mut Outputs) -> Result<RunManifest> {
    let start = Instant::now();
    let mut records = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for command in commands {
        let name = command.name();
        let occurrence = seen.iter().filter(|n| **n == name).count();
        seen.push(name);
        let t0 = Instant::now();
        let (files, passed) = execute_one(loaded, command, &stem(name, occurrence), out)
            .map_err(|source| CliError::Numerical {
                command: name.to_string(),
                source,
            })
            .and_then(|r| r)?;
        records.push(CommandRecord {
            command: name.to_string(),
            files,
            passed,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    let manifest = RunManifest {
        schema: SCHEMA,
        tool: "rclt".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: loaded.config_hash.clone(),
        master_seed: loaded.master_seed,
        commands: records,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    Ok(manifest)
}

type Step = Result<(Vec<String>, bool)>;

/// Outer error: numerical failure inside the core; inner: output I/O.
fn execute_one(
    loaded: &LoadedConfig,
    command: &Command,
    stem: &str,
    out: &mut Outputs,
) -> rclt_core::Result<Step> {
    let chain = &loaded.chain;
    let f = &loaded.observable;
    let seed = loaded.master_seed.unwrap_or(0);
    let name = command.name();
    let json_name = format!("{stem}.json");

    let limit = |report: LimitReport, out: &mut Outputs| -> Step {
        let passed = report.passed;
        let mut files = vec![out.json(
            &json_name,
            &Envelope {
                schema: SCHEMA,
                command: name,
                body: &report,
            },
        )?];
        if !report.standardized.is_empty() {
            let rows = report
                .standardized
                .iter()
                .enumerate()
                .map(|(r, z)| vec![r.to_string(), num(*z)])
                .collect();
            files.push(out.csv(&format!("{stem}.csv"), &["replica", "z"], rows)?);
        }
        if !report.variance_profile.is_empty() {
            let rows = report
                .variance_profile
                .iter()
                .map(|p| vec![num(p.t), num(p.variance), num(p.expected), num(p.std_error)])
                .collect();
            files.push(out.csv(
                &format!("{stem}.csv"),
                &["t", "variance", "expected", "std_error"],
                rows,
            )?);
        }
        Ok((files, passed))
    };

    Ok(match command {
        Command::Spectrum => {
            let (eigenvalues, _) = symmetric_eigen(chain)?;
            let body = SpectrumBody {
                n_states: chain.n_states(),
                stationary: chain.stationary().iter().copied().collect(),
                eigenvalues,
                absolute_spectral_gap: chain.absolute_spectral_gap()?,
                spectral_measure: spectral_measure(chain, f)?,
            };
            out.json(
                &json_name,
                &Envelope {
                    schema: SCHEMA,
                    command: name,
                    body: &body,
                },
            )
            .map(|file| (vec![file], true))
        }
        Command::Variance { n_max } => {
            let rho = spectral_measure(chain, f)?;
            let report = variance_report_with(chain, f, &rho, *n_max)?;
            let rows = report
                .var_sn_over_n
                .iter()
                .enumerate()
                .map(|(i, v)| vec![(i + 1).to_string(), num(*v)])
                .collect();
            let body = VarianceBody {
                identity_residual: report.identity_residual(),
                max_pairwise_gap: report.max_pairwise_gap(),
                report,
            };
            (|| {
                let a = out.json(
                    &json_name,
                    &Envelope {
                        schema: SCHEMA,
                        command: name,
                        body: &body,
                    },
                )?;
                let b = out.csv(&format!("{stem}.csv"), &["n", "var_sn_over_n"], rows)?;
                Ok((vec![a, b], true))
            })()
        }
        Command::Decompose {
            length,
            horizon,
            trajectories,
        } => {
            let d = Decomposer::new(chain, f, *horizon)?;
            let mut summaries = Vec::new();
            let mut csvs = Vec::new();
            for r in 0..*trajectories as u64 {
                let traj = sample_trajectory_stream(chain, f, *length, seed, r)?;
                let terms = decompose_trajectory(chain, f, &traj, *horizon)?;
                let rows = terms
                    .rows()
                    .into_iter()
                    .map(|row| {
                        vec![
                            row.k.to_string(),
                            num(row.x),
                            opt(row.forward),
                            opt(row.reversed),
                            opt(row.boundary),
                            opt(row.limit_forward),
                            opt(row.residual_xk1),
                            opt(row.residual_martdec),
                        ]
                    })
                    .collect();
                let csv_name = format!("{stem}-{r}.csv");
                summaries.push(TrajectorySummary {
                    stream: r,
                    max_residual_xk1: terms.max_residual_xk1(),
                    max_residual_martdec: terms.max_residual_martdec(),
                    certified: terms.certified(),
                    csv: csv_name.clone(),
                });
                csvs.push((csv_name, rows));
            }
            let passed = summaries.iter().all(|s| s.certified);
            let body = DecomposeBody {
                n: *horizon,
                length: *length,
                cesaro_certificate: d.cesaro_certificate(),
                limit_certificate: d.limit_certificate(),
                limit_second_moment: d.limit_second_moment(),
                l2_distance_to_limit: d.l2_distance_to_limit(),
                trajectories: summaries,
                passed,
            };
            (|| {
                let mut files = vec![out.json(
                    &json_name,
                    &Envelope {
                        schema: SCHEMA,
                        command: name,
                        body: &body,
                    },
                )?];
                for (csv_name, rows) in csvs {
                    files.push(out.csv(
                        &csv_name,
                        &[
                            "k",
                            "X_k",
                            "D_k^n",
                            "D~_k^n",
                            "B_{n,k}",
                            "D_k",
                            "residual_Xk1",
                            "residual_Martdec",
                        ],
                        rows,
                    )?);
                }
                Ok((files, passed))
            })()
        }
        Command::Clt { n, replicas } => limit(clt_test(chain, f, *n, *replicas, seed)?, out),
        Command::Fclt { n, replicas, grid } => {
            limit(fclt_profile(chain, f, *n, *replicas, grid, seed)?, out)
        }
        Command::Maximal {
            n,
            lambdas,
            mode,
            exhaustive,
            replicas,
            two_sided,
        } => {
            let method = if *exhaustive {
                MaximalMethod::Exhaustive
            } else {
                MaximalMethod::MonteCarlo {
                    replicas: replicas.unwrap_or(10_000),
                    seed,
                }
            };
            limit(
                maximal_inequality_check(chain, f, *n, lambdas, *mode, method, *two_sided)?,
                out,
            )
        }
        Command::UiDiagnostic {
            n_list,
            thresholds,
            replicas,
        } => limit(
            uniform_integrability_diagnostic(chain, f, n_list, thresholds, *replicas, seed)?,
            out,
        ),
    })
}
