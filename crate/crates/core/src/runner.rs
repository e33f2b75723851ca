//! Experiment orchestration: seed fan-out across independent runs, output
//! layout, and report generation over the emitted CSVs.
//!
//! Layout per experiment: `out/<agent>[_<beta>]/run_<k>/` holding
//! `phases.csv`, `episodes.jsonl`, a copy of the scenario, a run summary and
//! (for learning agents) `checkpoints/`.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{run_training, AgentKind, RunError, RunHooks};
use crate::load::PHASE_SIZE;
use crate::metrics::{
    read_phase_csv, rupture_report, write_phase_csv, PhaseRow, ReportRow, RuptureReport,
};
use crate::scenario::{dump_scenario, load_scenario, Scenario, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Run(#[from] RunError),
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Message(String),
}

pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub kind: AgentKind,
    pub runs: u64,
    pub base_seed: u64,
    pub budget: u64,
    pub out_dir: PathBuf,
    /// Worker pool size; defaults to the number of cores.
    pub workers: Option<usize>,
    pub log_episodes: bool,
    pub checkpoints: bool,
}

/// Directory label for an agent: `heu`, `drl`, or `hadrl_<beta>`.
pub fn agent_label(kind: AgentKind, beta: f64) -> String {
    match kind {
        AgentKind::Hadrl => format!("hadrl_{beta}"),
        other => other.name().to_string(),
    }
}

/// Runs `spec.runs` independent seeds (base_seed + run id), one run per
/// worker, and writes each run's outputs under its own directory. Returns
/// the run directories in run-id order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<PathBuf>, RunnerError> {
    let label = agent_label(spec.kind, spec.scenario.hyper.beta);
    let agent_dir = spec.out_dir.join(&label);
    std::fs::create_dir_all(&agent_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or_else(num_workers))
        .build()
        .map_err(|e| RunnerError::Message(format!("worker pool: {e}")))?;
    let mut dirs: Vec<(u64, PathBuf)> = pool.install(|| {
        (0..spec.runs)
            .into_par_iter()
            .map(|run_id| {
                let dir = agent_dir.join(format!("run_{run_id}"));
                execute_run(spec, &label, run_id, &dir)?;
                Ok::<_, RunnerError>((run_id, dir))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    dirs.sort_by_key(|(id, _)| *id);
    Ok(dirs.into_iter().map(|(_, d)| d).collect())
}

fn num_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    agent: &'a str,
    beta: Option<f64>,
    seed: u64,
    run_id: u64,
    budget: u64,
    episodes: u64,
    accepted: u64,
    acceptance_ratio: f64,
}

fn execute_run(
    spec: &ExperimentSpec,
    label: &str,
    run_id: u64,
    dir: &Path,
) -> Result<(), RunnerError> {
    std::fs::create_dir_all(dir)?;
    dump_scenario(&spec.scenario, &dir.join("scenario.json"))?;

    let checkpoint_dir = if spec.checkpoints && spec.kind != AgentKind::Heu {
        let d = dir.join("checkpoints");
        std::fs::create_dir_all(&d)?;
        Some(d)
    } else {
        None
    };
    let mut episode_writer = if spec.log_episodes {
        Some(std::io::BufWriter::new(std::fs::File::create(
            dir.join("episodes.jsonl"),
        )?))
    } else {
        None
    };
    let mut write_episode = |rec: &crate::env::EpisodeRecord| {
        if let Some(w) = episode_writer.as_mut() {
            serde_json::to_writer(&mut *w, rec).expect("episode record serializes");
            w.write_all(b"\n").expect("episode log write");
        }
    };
    let mut hooks = RunHooks {
        checkpoint_dir,
        on_episode: Some(&mut write_episode),
    };

    let seed = spec.base_seed + run_id;
    let result = run_training(&spec.scenario, spec.kind, spec.budget, seed, &mut hooks)?;
    drop(hooks);
    if let Some(w) = episode_writer.as_mut() {
        w.flush()?;
    }

    let beta = match spec.kind {
        AgentKind::Hadrl => Some(spec.scenario.hyper.beta),
        _ => None,
    };
    let rows: Vec<PhaseRow> = result
        .phases
        .iter()
        .map(|p| PhaseRow {
            run_id,
            agent: label.to_string(),
            beta,
            seed,
            phase: p.phase,
            accepted: p.accepted,
            tar: p.accepted as f64 / p.episodes as f64,
            load_target: p.load_target,
        })
        .collect();
    write_phase_csv(&dir.join("phases.csv"), &rows)?;

    let summary = RunSummary {
        agent: label,
        beta,
        seed,
        run_id,
        budget: spec.budget,
        episodes: result.episodes,
        accepted: result.accepted,
        acceptance_ratio: if result.episodes > 0 {
            result.accepted as f64 / result.episodes as f64
        } else {
            0.0
        },
    };
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(())
}

pub struct ReportSpec {
    /// A directory scanned recursively for `phases.csv`, or one CSV file.
    pub input: PathBuf,
    /// Overrides the rupture phase recorded in the run's scenario copy.
    pub rupture_phase: Option<usize>,
    pub window: usize,
    pub out: Option<PathBuf>,
    /// When set, per-agent seed-averaged TAR series are written here in a
    /// two-column format with the rupture phase marked in the header.
    pub plot_data: Option<PathBuf>,
}

fn find_phase_csvs(root: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(root)? {
        let path = entry?.path();
        if path.is_dir() {
            find_phase_csvs(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "phases.csv") {
            out.push(path);
        }
    }
    Ok(())
}

fn sibling_rupture_phase(csv_path: &Path) -> Option<usize> {
    let scenario_path = csv_path.parent()?.join("scenario.json");
    let scenario = load_scenario(&scenario_path).ok()?;
    scenario.schedule.rupture.map(|r| r.phase as usize)
}

type RunKey = (String, Option<u64>, u64, u64); // agent, beta bits, run, seed

/// Rupture-robustness report over all runs found under `input`: one row per
/// run plus a seed-averaged row per agent, in the result-table layout.
pub fn report(spec: &ReportSpec) -> Result<Vec<ReportRow>, RunnerError> {
    let mut files = Vec::new();
    if spec.input.is_dir() {
        find_phase_csvs(&spec.input, &mut files)?;
        files.sort();
    } else {
        files.push(spec.input.clone());
    }
    if files.is_empty() {
        return Err(RunnerError::Message(format!(
            "no phases.csv found under {}",
            spec.input.display()
        )));
    }

    let mut groups: std::collections::BTreeMap<RunKey, Vec<PhaseRow>> =
        std::collections::BTreeMap::new();
    let mut rupture_phase = spec.rupture_phase;
    for file in &files {
        if rupture_phase.is_none() {
            rupture_phase = sibling_rupture_phase(file);
        }
        for row in read_phase_csv(file)? {
            let key = (
                row.agent.clone(),
                row.beta.map(f64::to_bits),
                row.run_id,
                row.seed,
            );
            groups.entry(key).or_default().push(row);
        }
    }
    let Some(rupture_phase) = rupture_phase else {
        return Err(RunnerError::Message(
            "no rupture phase: pass --rupture-phase or run with a rupture in the scenario".into(),
        ));
    };

    let mut rows: Vec<ReportRow> = Vec::new();
    let mut by_agent: std::collections::BTreeMap<(String, Option<u64>), Vec<RuptureReport>> =
        std::collections::BTreeMap::new();
    for ((agent, beta_bits, run_id, seed), mut phase_rows) in groups {
        phase_rows.sort_by_key(|r| r.phase);
        let tars: Vec<f64> = phase_rows.iter().map(|r| r.tar).collect();
        let rep = rupture_report(&tars, rupture_phase, spec.window)
            .map_err(|e| RunnerError::Message(format!("{agent} run {run_id}: {e}")))?;
        let beta = beta_bits.map(f64::from_bits);
        rows.push(ReportRow::from_report(
            &agent,
            beta,
            Some(run_id),
            Some(seed),
            &rep,
        ));
        by_agent.entry((agent, beta_bits)).or_default().push(rep);
    }
    for ((agent, beta_bits), reports) in by_agent {
        let n = reports.len() as f64;
        let mean = RuptureReport {
            rupture_tar: reports.iter().map(|r| r.rupture_tar).sum::<f64>() / n,
            last_tar: reports.iter().map(|r| r.last_tar).sum::<f64>() / n,
            avg_tar: reports.iter().map(|r| r.avg_tar).sum::<f64>() / n,
            std_tar: reports.iter().map(|r| r.std_tar).sum::<f64>() / n,
            gap_avg: reports.iter().map(|r| r.gap_avg).sum::<f64>() / n,
            gap_last: reports.iter().map(|r| r.gap_last).sum::<f64>() / n,
        };
        rows.push(ReportRow::from_report(
            &agent,
            beta_bits.map(f64::from_bits),
            None,
            None,
            &mean,
        ));
    }

    if let Some(out) = &spec.out {
        let mut w = csv::Writer::from_path(out)?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    if let Some(plot_dir) = &spec.plot_data {
        write_plot_data(plot_dir, &files, rupture_phase)?;
    }
    Ok(rows)
}

/// Per agent, the seed-averaged TAR per phase as `phase tar` lines.
fn write_plot_data(
    dir: &Path,
    files: &[PathBuf],
    rupture_phase: usize,
) -> Result<(), RunnerError> {
    std::fs::create_dir_all(dir)?;
    let mut per_agent: std::collections::BTreeMap<String, Vec<(u64, f64)>> =
        std::collections::BTreeMap::new();
    for file in files {
        for row in read_phase_csv(file)? {
            per_agent
                .entry(row.agent.clone())
                .or_default()
                .push((row.phase, row.tar));
        }
    }
    for (agent, mut points) in per_agent {
        points.sort_by_key(|(p, _)| *p);
        let mut file = std::io::BufWriter::new(std::fs::File::create(
            dir.join(format!("{agent}.dat")),
        )?);
        writeln!(file, "# agent={agent} rupture_phase={rupture_phase}")?;
        let mut i = 0;
        while i < points.len() {
            let phase = points[i].0;
            let mut sum = 0.0;
            let mut count = 0;
            while i < points.len() && points[i].0 == phase {
                sum += points[i].1;
                count += 1;
                i += 1;
            }
            writeln!(file, "{phase} {}", sum / count as f64)?;
        }
        file.flush()?;
    }
    Ok(())
}

/// Human-readable derivation of a scenario: substrate size, capacities,
/// solved arrival rates and offered loads per resource.
pub fn scenario_summary(scenario: &Scenario) -> Result<String, RunnerError> {
    use num_traits::ToPrimitive;
    let psn = crate::topology::build_reference_psn(&scenario.topology);
    psn.check_invariants()
        .map_err(|errs| RunnerError::Message(errs.join("\n")))?;
    let mut out = String::new();
    let cpu = psn.total_server_cpu();
    out.push_str(&format!(
        "substrate: {} nodes, {} links, {} servers, {} CPU / {} RAM units total\n",
        psn.node_count(),
        psn.link_count(),
        psn.servers().len(),
        cpu,
        psn.total_server_ram(),
    ));
    let lambdas = scenario
        .schedule
        .lambdas_at(0, &scenario.classes, cpu)
        .map_err(|e| RunnerError::Message(e.to_string()))?;
    for (class, lambda) in scenario.classes.iter().zip(&lambdas) {
        out.push_str(&format!(
            "class {}: {} VNFs x {} cpu / {} ram, {} Gbps per VL, mean lifespan {}, arrival rate {:.6}\n",
            class.name,
            class.vnf_count,
            class.cpu_per_vnf,
            class.ram_per_vnf,
            class.vl_bw_gbps,
            class.mean_lifespan,
            lambda.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let offered_ram: f64 = scenario
        .classes
        .iter()
        .zip(&lambdas)
        .map(|(c, l)| {
            l.to_f64().unwrap_or(0.0) * c.mean_lifespan * c.total_ram() as f64
                / psn.total_server_ram() as f64
        })
        .sum();
    out.push_str(&format!(
        "baseline offered load: cpu {} (target), ram {:.4}\n",
        scenario
            .schedule
            .target_at(0)
            .to_f64()
            .unwrap_or(f64::NAN),
        offered_ram,
    ));
    if let Some(r) = &scenario.schedule.rupture {
        out.push_str(&format!(
            "rupture: +{} load at phase {} (episode {})\n",
            r.delta_load,
            r.phase,
            r.phase * PHASE_SIZE,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::Rupture;

    #[test]
    fn experiment_layout_and_report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut scenario = Scenario::reduced();
        scenario.schedule.rupture = Some(Rupture {
            phase: 2,
            delta_load: 0.6,
        });
        let spec = ExperimentSpec {
            scenario,
            kind: AgentKind::Heu,
            runs: 2,
            base_seed: 5,
            budget: 2000,
            out_dir: dir.path().to_path_buf(),
            workers: Some(2),
            log_episodes: true,
            checkpoints: true,
        };
        let run_dirs = run_experiment(&spec).unwrap();
        assert_eq!(run_dirs.len(), 2);
        for d in &run_dirs {
            assert!(d.join("phases.csv").exists());
            assert!(d.join("episodes.jsonl").exists());
            assert!(d.join("scenario.json").exists());
            assert!(d.join("summary.json").exists());
            // heu has no networks, so no checkpoints
            assert!(!d.join("checkpoints").exists());
        }
        let report_rows = report(&ReportSpec {
            input: dir.path().to_path_buf(),
            rupture_phase: None, // picked up from the scenario copies
            window: 30,
            out: Some(dir.path().join("report.csv")),
            plot_data: Some(dir.path().join("plot")),
        })
        .unwrap();
        // two per-run rows plus one seed-averaged row
        assert_eq!(report_rows.len(), 3);
        assert!(dir.path().join("report.csv").exists());
        assert!(dir.path().join("plot").join("heu.dat").exists());
    }

    #[test]
    fn identical_seeds_give_identical_trees() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let scenario = Scenario::reduced();
        let mk = |out: &Path| ExperimentSpec {
            scenario: scenario.clone(),
            kind: AgentKind::Drl,
            runs: 1,
            base_seed: 11,
            budget: 600,
            out_dir: out.to_path_buf(),
            workers: Some(1),
            log_episodes: true,
            checkpoints: false,
        };
        run_experiment(&mk(dir_a.path())).unwrap();
        run_experiment(&mk(dir_b.path())).unwrap();
        for name in ["phases.csv", "episodes.jsonl", "summary.json", "scenario.json"] {
            let a = std::fs::read(dir_a.path().join("drl/run_0").join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join("drl/run_0").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn summary_mentions_substrate_and_rates() {
        let s = Scenario::default();
        let text = scenario_summary(&s).unwrap();
        assert!(text.contains("147 nodes"));
        assert!(text.contains("0.504"));
    }
}
