//! Implementations of the four subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use mbqkd::analysis::{
    detection_escape_per_character, detection_escape_probability, estimate_cycle_escape,
    estimate_mi_from_transcript, iab_closed_form, iae_closed_form,
    joint_distribution_closed_form, sample_joint_distribution, BasisConfig, JointEstimate,
};
use mbqkd::fock::MixedBasisSymbol;
use mbqkd::protocol::{run_session, sift, RoundRecord};
use mbqkd::SessionConfig64;
use serde::Serialize;
use serde_json::json;

use crate::format::fmt_f64;
use crate::manifest::RunManifest;
use crate::{
    check_probability, resolve_seed, runtime, validation, CliResult, DetectArgs, MiCurveArgs,
    SimulateArgs, TableArgs, Toggle, TranscriptFormat,
};

/// Transcript CSV column order; the JSONL records carry the same fields.
const TRANSCRIPT_HEADER: &str =
    "round_id,bob_basis,alice_basis,alice_symbol,eve_active,eve_read,eve_sent,bob_outcome,kind";

#[derive(Serialize)]
struct SiftSummary {
    rounds: u64,
    key_symbols: u64,
    key_bits: u64,
    control_records: u64,
    bitflip_count: u64,
    eve_detected: bool,
}

fn basis_label(basis: mbqkd::protocol::BasisChoice) -> &'static str {
    match basis {
        mbqkd::protocol::BasisChoice::Plain => "plain",
        mbqkd::protocol::BasisChoice::Hadamard => "hadamard",
    }
}

fn kind_label(kind: mbqkd::protocol::RoundKind) -> &'static str {
    match kind {
        mbqkd::protocol::RoundKind::SameBasis => "same_basis",
        mbqkd::protocol::RoundKind::DifferentBasis => "different_basis",
    }
}

fn symbol_label(symbol: Option<MixedBasisSymbol>) -> String {
    symbol.map(|s| s.to_string()).unwrap_or_default()
}

fn transcript_csv_row(record: &RoundRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        record.round_id,
        basis_label(record.bob_basis),
        basis_label(record.alice_basis),
        record.alice_symbol,
        record.eve_active,
        symbol_label(record.eve_read),
        symbol_label(record.eve_sent),
        record.bob_outcome,
        kind_label(record.kind),
    )
}

fn write_transcript(
    path: &Path,
    format: TranscriptFormat,
    transcript: &[RoundRecord],
) -> CliResult {
    let file = File::create(path)
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    match format {
        TranscriptFormat::Jsonl => {
            for record in transcript {
                let line = serde_json::to_string(record).map_err(runtime)?;
                writeln!(writer, "{line}").map_err(runtime)?;
            }
        }
        TranscriptFormat::Csv => {
            writeln!(writer, "{TRANSCRIPT_HEADER}").map_err(runtime)?;
            for record in transcript {
                writeln!(writer, "{}", transcript_csv_row(record)).map_err(runtime)?;
            }
        }
    }
    writer.flush().map_err(runtime)
}

pub fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    check_probability("eve-presence", args.eve_presence)?;
    let seed = resolve_seed(args.seed)?;
    let started = Instant::now();

    let config = SessionConfig64::new(
        args.rounds,
        args.eve_presence,
        args.attack == Toggle::On,
        seed,
    );
    let transcript = run_session(&config).map_err(runtime)?;
    write_transcript(&args.out, args.format, &transcript)?;
    let sifted = sift(&transcript);

    let summary = SiftSummary {
        rounds: args.rounds,
        key_symbols: sifted.key_symbols.len() as u64,
        key_bits: 2 * sifted.key_symbols.len() as u64,
        control_records: sifted.control_records.len() as u64,
        bitflip_count: sifted.bitflip_count,
        eve_detected: sifted.eve_detected,
    };
    let line = serde_json::to_string(&summary).map_err(runtime)?;
    writeln!(out, "{line}").map_err(runtime)?;

    RunManifest::new(
        "simulate",
        seed,
        json!({
            "rounds": args.rounds,
            "eve_presence": args.eve_presence,
            "attack": args.attack == Toggle::On,
            "format": match args.format {
                TranscriptFormat::Jsonl => "jsonl",
                TranscriptFormat::Csv => "csv",
            },
            "out": args.out.display().to_string(),
        }),
        started.elapsed(),
    )
    .write_beside(&args.out)
}

/// Writes CSV either to `--out` or to the primary writer.
fn emit_csv(
    out_path: Option<&Path>,
    out: &mut dyn Write,
    lines: &[String],
    manifest: Option<RunManifest>,
) -> CliResult {
    match out_path {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
            let mut writer = BufWriter::new(file);
            for line in lines {
                writeln!(writer, "{line}").map_err(runtime)?;
            }
            writer.flush().map_err(runtime)?;
            if let Some(manifest) = manifest {
                manifest.write_beside(path)?;
            }
            Ok(())
        }
        None => {
            for line in lines {
                writeln!(out, "{line}").map_err(runtime)?;
            }
            Ok(())
        }
    }
}

fn k_label(k: Option<MixedBasisSymbol>) -> String {
    k.map(|s| s.number().to_string())
        .unwrap_or_else(|| "none".to_string())
}

pub fn table(args: &TableArgs, out: &mut dyn Write) -> CliResult {
    let config = match args.which {
        1 => BasisConfig::NoHwp,
        2 => BasisConfig::BothHwp,
        other => return Err(validation(format!("--which must be 1 or 2, got {other}"))),
    };
    check_probability("x", args.x)?;
    if args.rounds == Some(0) {
        return Err(validation("--rounds must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let started = Instant::now();

    let closed = joint_distribution_closed_form(args.x, config).map_err(runtime)?;
    let monte_carlo: Option<JointEstimate<f64>> = match args.rounds {
        Some(rounds) => {
            Some(sample_joint_distribution(config, args.x, rounds, seed).map_err(runtime)?)
        }
        None => None,
    };

    let mut lines = vec!["j,k,m,closed_form,monte_carlo,stderr".to_string()];
    for (j, k, m, p) in closed.entries() {
        let (mc, se) = match &monte_carlo {
            Some(estimate) => (
                fmt_f64(estimate.joint.prob(j, k, m)),
                fmt_f64(estimate.stderr_of(j, k, m)),
            ),
            None => (String::new(), String::new()),
        };
        lines.push(format!(
            "{},{},{},{},{},{}",
            j.number(),
            k_label(k),
            m.number(),
            fmt_f64(p),
            mc,
            se
        ));
    }

    let manifest = RunManifest::new(
        "table",
        seed,
        json!({
            "which": args.which,
            "x": args.x,
            "rounds": args.rounds,
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        }),
        started.elapsed(),
    );
    emit_csv(args.out.as_deref(), out, &lines, Some(manifest))
}

pub fn mi_curve(args: &MiCurveArgs, out: &mut dyn Write) -> CliResult {
    check_probability("x-start", args.x_start)?;
    check_probability("x-end", args.x_end)?;
    if args.x_end < args.x_start {
        return Err(validation("--x-end must not be below --x-start"));
    }
    if args.steps == 0 {
        return Err(validation("--steps must be at least 1"));
    }
    if args.steps == 1 && args.x_end != args.x_start {
        return Err(validation("--steps 1 needs --x-start equal to --x-end"));
    }
    if args.rounds == Some(0) {
        return Err(validation("--rounds must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let started = Instant::now();

    let header = if args.rounds.is_some() {
        "x,i_ab,i_ae,i_ab_mc,i_ab_stderr,i_ae_mc,i_ae_stderr"
    } else {
        "x,i_ab,i_ae"
    };
    let mut lines = vec![header.to_string()];
    for i in 0..args.steps {
        let x = if args.steps == 1 {
            args.x_start
        } else {
            args.x_start + (args.x_end - args.x_start) * i as f64 / (args.steps - 1) as f64
        };
        let i_ab = iab_closed_form(x).map_err(runtime)?;
        let i_ae = iae_closed_form(x).map_err(runtime)?;
        let mut line = format!("{},{},{}", fmt_f64(x), fmt_f64(i_ab), fmt_f64(i_ae));
        if let Some(rounds) = args.rounds {
            // Per-point substream so grid points stay independent.
            let config = SessionConfig64::new(rounds, x, true, seed.wrapping_add(i as u64));
            let transcript = run_session(&config).map_err(runtime)?;
            let report = estimate_mi_from_transcript(&transcript, x).map_err(runtime)?;
            line.push_str(&format!(
                ",{},{},{},{}",
                fmt_f64(report.i_ab_estimate),
                fmt_f64(report.i_ab_stderr),
                fmt_f64(report.i_ae_estimate),
                fmt_f64(report.i_ae_stderr),
            ));
        }
        lines.push(line);
    }

    let manifest = RunManifest::new(
        "mi-curve",
        seed,
        json!({
            "x_start": args.x_start,
            "x_end": args.x_end,
            "steps": args.steps,
            "rounds": args.rounds,
            "out": args.out.as_ref().map(|p| p.display().to_string()),
        }),
        started.elapsed(),
    );
    emit_csv(args.out.as_deref(), out, &lines, Some(manifest))
}

pub fn detect(args: &DetectArgs, out: &mut dyn Write) -> CliResult {
    if args.cycles.is_none() && args.characters.is_none() {
        return Err(validation("provide --cycles and/or --characters"));
    }
    check_probability("eve-presence", args.eve_presence)?;
    if args.rounds == Some(0) {
        return Err(validation("--rounds must be positive"));
    }
    let seed = resolve_seed(args.seed)?;

    let mut write = |line: String| writeln!(out, "{line}").map_err(runtime);
    if let Some(cycles) = args.cycles {
        write(format!(
            "per_cycle_escape_closed_form: {}",
            fmt_f64(detection_escape_probability::<f64>(1))
        ))?;
        write(format!("cycles: {cycles}"))?;
        write(format!(
            "escape_probability_closed_form: {}",
            fmt_f64(detection_escape_probability::<f64>(cycles))
        ))?;
    }
    if let Some(characters) = args.characters {
        let per_character = detection_escape_per_character::<f64>();
        write(format!(
            "per_character_escape_constant: {}",
            fmt_f64(per_character)
        ))?;
        write(format!("characters: {characters}"))?;
        write(format!(
            "character_escape_probability_closed_form: {}",
            fmt_f64(per_character.powi(characters as i32))
        ))?;
    }
    if let Some(rounds) = args.rounds {
        let estimate =
            estimate_cycle_escape::<f64>(args.eve_presence, rounds, seed).map_err(runtime)?;
        let half_width = 1.959963984540054 * estimate.stderr;
        write(format!(
            "per_cycle_escape_monte_carlo: {}",
            fmt_f64(estimate.escape)
        ))?;
        write(format!("monte_carlo_stderr: {}", fmt_f64(estimate.stderr)))?;
        write(format!(
            "monte_carlo_ci95: [{}, {}]",
            fmt_f64(estimate.escape - half_width),
            fmt_f64(estimate.escape + half_width)
        ))?;
        write(format!("cycles_simulated: {}", estimate.cycles))?;
        write(format!("eve_presence: {}", fmt_f64(args.eve_presence)))?;
    }
    Ok(())
}
