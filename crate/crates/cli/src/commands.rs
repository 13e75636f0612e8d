//! The four subcommands. Each one validates its config blocks up
//! front, does its work through the core crate, writes plot-ready
//! files into the output directory, and reports to stdout unless
//! quieted.

use std::path::{Path, PathBuf};

use superlum_core::optics::Device;
use superlum_core::protocol::{
    effective_speed, estimate_reliability, reliability_csv, verify_bound, ProtocolError,
    ReliabilityEstimate, SpeedOutcome, SpeedSearch, SpeedSearchConfig,
};
use superlum_core::relativity::antinomy_scenario;
use superlum_core::rng::stream_seed;
use superlum_core::SimError;

use crate::config::RunConfig;
use crate::persist::{out_path, read_alarm_logs, write_alarm_logs, write_file};
use crate::CliError;

/// Stream labels carving independent seed spaces out of the master
/// seed for the different estimation stages.
const CHANNEL_STREAM: u64 = 0xC4A7;
const SEARCH_STREAM: u64 = 0x5EA6;
const BOOTSTRAP_STREAM: u64 = 0xB007;

pub struct RunContext {
    pub config: RunConfig,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub cycles_override: Option<usize>,
    pub quiet: bool,
}

impl RunContext {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn classify_sim(e: SimError) -> CliError {
    match e {
        SimError::MalformedRecord { .. } => CliError::Runtime(e.to_string()),
        _ => CliError::Validation(e.to_string()),
    }
}

fn classify_protocol(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::InvalidSchedule(_) | ProtocolError::NegativeWaiting { .. } => {
            CliError::Validation(e.to_string())
        }
        ProtocolError::Simulation(inner) => classify_sim(inner),
        _ => CliError::Runtime(e.to_string()),
    }
}

/// Closed-form design report: speed range, feasibility, and a
/// sensitivity sweep over the idler/signal ratio and the pump arm.
pub fn plan(ctx: &RunContext) -> Result<(), CliError> {
    let geometry = ctx.config.geometry()?;
    let vmax = geometry
        .max_signal_speed()
        .map_err(|e| CliError::Validation(format!("geometry: {e}")))?;
    let vmin = geometry
        .min_signal_speed()
        .map_err(|e| CliError::Validation(format!("geometry: {e}")))?;
    let feasible = geometry.is_feasible();
    let c = geometry.light_speed();

    let mut csv = String::from("idler_over_signal,pump_arm,v_max,v_min,v_max_over_c,feasible\n");
    let spec = *geometry.spec();
    for tenth in 0..=9 {
        let ratio = tenth as f64 / 10.0;
        for arm_scale in [0.5, 1.0, 2.0] {
            let mut swept = spec;
            swept.idler_leg = ratio * spec.signal_leg;
            swept.pump_arm = arm_scale * spec.pump_arm;
            let g = superlum_core::ApparatusGeometry::new(swept)
                .map_err(|e| CliError::Validation(format!("sweep geometry: {e}")))?;
            let sweep_vmax = g.max_signal_speed().expect("ratio < 1 keeps legs ordered");
            let sweep_vmin = g.min_signal_speed().expect("ratio < 1 keeps legs ordered");
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                ratio,
                swept.pump_arm,
                sweep_vmax,
                sweep_vmin,
                sweep_vmax / c,
                g.is_feasible()
            ));
        }
    }
    let path = out_path(&ctx.out_dir, "plan.csv");
    write_file(&path, &csv)?;

    ctx.say(format!("v_max = {vmax} ({} c)", vmax / c));
    ctx.say(format!("v_min = {vmin} ({} c)", vmin / c));
    ctx.say(format!(
        "feasibility (pump_arm * sqrt(2) > c * electronics_lag): {feasible}"
    ));
    ctx.say(format!("sensitivity sweep -> {}", path.display()));
    Ok(())
}

/// Simulates the scheduled cycles and persists the alarm log.
pub fn simulate(ctx: &RunContext) -> Result<(), CliError> {
    let geometry = ctx.config.geometry()?;
    let hypothesis = ctx.config.hypothesis()?;
    let schedule = ctx.config.schedule(ctx.cycles_override)?;
    let device = Device::new(geometry, hypothesis).map_err(classify_sim)?;

    let mut logs = Vec::with_capacity(schedule.total_cycles());
    for level in 0..schedule.level_count() {
        let plan = schedule.plan_for_level(level);
        let first = (level * schedule.cycles_per_level()) as u64;
        logs.extend(
            device
                .simulate_batch(&plan, schedule.cycles_per_level(), ctx.master_seed, first)
                .map_err(classify_sim)?,
        );
    }
    let alarm_count: usize = logs.iter().map(|l| l.alarm_times.len()).sum();
    let path = out_path(&ctx.out_dir, "alarms.log");
    write_alarm_logs(&path, &logs)?;

    // Persist the fully resolved config (overrides applied) so the run
    // can be reproduced from the output directory alone.
    let mut resolved = ctx.config.clone();
    resolved.run.master_seed = ctx.master_seed;
    if let (Some(block), Some(cycles)) = (resolved.schedule.as_mut(), ctx.cycles_override) {
        block.cycles_per_level = cycles;
    }
    write_file(&out_path(&ctx.out_dir, "run.toml"), &resolved.to_toml())?;

    ctx.say(format!(
        "simulated {} cycles ({} levels x {}), {} alarms -> {}",
        schedule.total_cycles(),
        schedule.level_count(),
        schedule.cycles_per_level(),
        alarm_count,
        path.display()
    ));
    Ok(())
}

fn describe_search(search: &SpeedSearch, c: f64) -> (String, String) {
    let mut csv = String::from("status,v_low,v_high,relative_width,evaluations\n");
    let summary = match search.outcome {
        SpeedOutcome::Bracket {
            low,
            high,
            unbracketed_above,
        } => {
            if unbracketed_above {
                csv.push_str(&format!(
                    "unbracketed_above,{low},inf,nan,{}\n",
                    search.evaluations.len()
                ));
                format!(
                    "effective speed: positive reliability at every probed speed; \
                     lower edge {low} ({} c), unbracketed above",
                    low / c
                )
            } else {
                let width = (high - low) / low;
                csv.push_str(&format!(
                    "bracketed,{low},{high},{width},{}\n",
                    search.evaluations.len()
                ));
                format!(
                    "effective speed in [{low}, {high}] ([{}, {}] c), width {:.2}%",
                    low / c,
                    high / c,
                    100.0 * width
                )
            }
        }
        SpeedOutcome::Undetectable => {
            csv.push_str(&format!(
                "undetectable,nan,nan,nan,{}\n",
                search.evaluations.len()
            ));
            "effective speed undetectable: the device never beat accident".to_string()
        }
    };
    (csv, summary)
}

/// Estimates reliability per probe speed from persisted logs, searches
/// for the effective speed with fresh batches, and checks the channel
/// bound.
pub fn estimate(ctx: &RunContext, logs_path: Option<&Path>) -> Result<(), CliError> {
    let geometry = ctx.config.geometry()?;
    let hypothesis = ctx.config.hypothesis()?;
    let schedule = ctx.config.schedule(ctx.cycles_override)?;
    let estimation = ctx.config.estimation()?.clone();
    let device = Device::new(geometry, hypothesis).map_err(classify_sim)?;
    let pump_arm = geometry.pump_arm();
    let c = geometry.light_speed();

    let default_logs = out_path(&ctx.out_dir, "alarms.log");
    let logs_path = logs_path.unwrap_or(&default_logs);
    let logs = read_alarm_logs(logs_path, &schedule, ctx.master_seed)?;
    if logs.iter().all(|l| l.alarm_times.is_empty()) {
        return Err(CliError::Runtime(format!(
            "{}: no alarms in any scheduled cycle; nothing to estimate",
            logs_path.display()
        )));
    }

    // Reliability table from the persisted logs.
    let bootstrap = ctx
        .config
        .bootstrap(stream_seed(ctx.master_seed, BOOTSTRAP_STREAM, 0))?;
    let mut rows = Vec::new();
    let mut estimates: Vec<ReliabilityEstimate> = Vec::new();
    for &speed in schedule.probe_speeds() {
        let est = estimate_reliability(&logs, &schedule, speed, pump_arm, &bootstrap)
            .map_err(classify_protocol)?;
        rows.extend(est.csv_rows());
        estimates.push(est);
    }
    let table_path = out_path(&ctx.out_dir, "reliability.csv");
    write_file(&table_path, &reliability_csv(&rows))?;

    // Effective-speed search over fresh simulation batches.
    let search = effective_speed(
        &device,
        &schedule,
        pump_arm,
        &bootstrap,
        &SpeedSearchConfig {
            relative_width: estimation.veff_relative_width,
            master_seed: stream_seed(ctx.master_seed, SEARCH_STREAM, 0),
            max_bisections: 64,
        },
    )
    .map_err(classify_protocol)?;
    let (veff_csv, veff_summary) = describe_search(&search, c);
    let veff_path = out_path(&ctx.out_dir, "veff.csv");
    write_file(&veff_path, &veff_csv)?;

    // Channel estimate once (it does not depend on the probe speed),
    // then the bound margin per probed speed.
    let ceiling_plan = schedule.plan_for_level(schedule.level_count() - 1);
    let channel = device
        .channel_of(
            &ceiling_plan,
            estimation.window,
            estimation.threshold,
            estimation.channel_cycles,
            stream_seed(ctx.master_seed, CHANNEL_STREAM, 0),
        )
        .map_err(classify_sim)?;
    let mut bound_csv =
        String::from("V,p01_hat,p11_hat,ratio,one_minus_r,margin,margin_se,holds\n");
    let mut bound_lines = Vec::new();
    for est in &estimates {
        let check = verify_bound(&channel, est, 3.0).map_err(classify_protocol)?;
        bound_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            est.probe_speed,
            channel.false_alarm,
            channel.hit,
            check.ratio,
            check.one_minus_r,
            check.margin,
            check.margin_se,
            check.holds
        ));
        bound_lines.push(format!(
            "V = {}: p01/p11 = {:.4} vs 1 - R = {:.4}, margin {:.4} ({})",
            est.probe_speed,
            check.ratio,
            check.one_minus_r,
            check.margin,
            if check.holds { "holds" } else { "VIOLATED" }
        ));
    }
    let bound_path = out_path(&ctx.out_dir, "bound.csv");
    write_file(&bound_path, &bound_csv)?;

    for est in &estimates {
        ctx.say(format!(
            "V = {}: R = {:.4} [{:.4}, {:.4}] at standby ceiling {} ({} cycles)",
            est.probe_speed,
            est.reliability,
            est.ci_low,
            est.ci_high,
            schedule.ceiling(),
            est.cycles_used
        ));
    }
    ctx.say(&veff_summary);
    for line in &bound_lines {
        ctx.say(line);
    }
    ctx.say(format!(
        "tables -> {}, {}, {}",
        table_path.display(),
        veff_path.display(),
        bound_path.display()
    ));
    Ok(())
}

/// Runs the round-trip posterior chain with its frame construction and
/// emits the iterate table plus the event report.
pub fn antinomy(ctx: &RunContext) -> Result<(), CliError> {
    let (matrix, prior, block) = ctx.config.channel_matrix()?;
    let scenario = antinomy_scenario(
        &matrix,
        prior,
        block.signal_speed,
        block.light_speed,
        block.epsilon,
        block.max_steps,
    )
    .map_err(|e| CliError::Validation(e.to_string()))?;

    let mut chain_csv = String::from("step,probability\n");
    for (step, p) in scenario.chain.iterates().iter().enumerate() {
        chain_csv.push_str(&format!("{step},{p}\n"));
    }
    let chain_path = out_path(&ctx.out_dir, "chain.csv");
    write_file(&chain_path, &chain_csv)?;

    let event_line = |label: &str, e: superlum_core::SpacetimeEvent| {
        format!("  {label}: x = {}, t = {}", e.position, e.time)
    };
    let report = [
        format!(
            "signal speed: {} (light speed {})",
            block.signal_speed, block.light_speed
        ),
        "lab frame:".to_string(),
        event_line("journey start (echo received)", scenario.journey_start),
        event_line("journey end (signal sent)    ", scenario.journey_end),
        event_line("relay (echo sent)            ", scenario.relay),
        format!("echo frame (beta = {}):", scenario.echo_frame.beta()),
        event_line("journey start", scenario.journey_start_in_echo_frame),
        event_line("journey end  ", scenario.journey_end_in_echo_frame),
        event_line("relay        ", scenario.relay_in_echo_frame),
        format!(
            "outbound within device cone: {}",
            scenario.outbound_within_cone
        ),
        format!(
            "echo within device cone (echo frame): {}",
            scenario.echo_within_cone
        ),
        format!(
            "relay precedes journey start in the echo frame: {}",
            scenario.relay_in_echo_frame.time < scenario.journey_start_in_echo_frame.time
        ),
        format!(
            "chain: prior {} -> {} after {} steps (converged: {}, vacuous: {})",
            scenario.chain.prior(),
            scenario.chain.final_value(),
            scenario.chain.steps(),
            scenario.chain.converged(),
            scenario.chain.vacuous()
        ),
        String::new(),
    ]
    .join("\n");
    let report_path = out_path(&ctx.out_dir, "scenario.txt");
    write_file(&report_path, &report)?;

    if matrix.is_uninformative() {
        ctx.say(
            "channel carries no information (p01 = p11): the posterior is a fixed point \
             and makes no progress",
        );
    }
    let preview: Vec<String> = scenario
        .chain
        .iterates()
        .iter()
        .take(4)
        .map(|p| format!("{p:.6}"))
        .collect();
    ctx.say(format!(
        "posterior chain: {}{} in {} steps (converged: {})",
        preview.join(" -> "),
        if scenario.chain.iterates().len() > 4 {
            " -> ..."
        } else {
            ""
        },
        scenario.chain.steps(),
        scenario.chain.converged()
    ));
    ctx.say(format!(
        "boosted relay time: {} (negative means the echo departs before the journey starts \
         in the echo frame)",
        scenario.relay_in_echo_frame.time
    ));
    ctx.say(format!(
        "reports -> {}, {}",
        chain_path.display(),
        report_path.display()
    ));
    Ok(())
}
