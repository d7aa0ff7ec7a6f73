use serde::Serialize;
use std::path::Path;

use roomacoustics::compliance::{
    check_sti, compare_sessions, compliance_report, sabine_advisor, AdvisorOptions, AdvisorReport, ComplianceReport,
    SessionComparison, StiCheck, TargetProfile,
};
use roomacoustics::decay::{schroeder_frequency, spatial_average, BandParams, SpatialAverage};
use roomacoustics::noise::{a_weighted_level, BandSpectrum};
use roomacoustics::sentinel;
use roomacoustics::signal::{BandDefinition, BandFraction};
use roomacoustics::sti::{Gender, StiRating, StiResult, STI_MODEL};

use crate::error::CliError;
use crate::manifest::Manifest;
use crate::report::{cell, file_stem_safe, text, Output, SessionInfo, Status};
use crate::session::{evaluate, report_bands, resolve_profile, EvalOptions, Evaluation};

/// Exported decay curves keep one row per millisecond.
fn curve_stride(sample_rate: u32) -> usize {
    (sample_rate as usize / 1000).max(1)
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

fn averages_of(positions: &[Vec<BandParams>]) -> Result<Option<Vec<SpatialAverage>>, CliError> {
    if positions.is_empty() {
        return Ok(None);
    }
    Ok(Some(spatial_average(positions)?))
}

fn params_of(averages: &[SpatialAverage]) -> Vec<BandParams> {
    averages.iter().map(|a| a.params.clone()).collect()
}

#[derive(Serialize)]
struct BandRow<'a> {
    #[serde(flatten)]
    params: &'a BandParams,
    d50: Option<f64>,
}

#[derive(Serialize)]
struct PositionReport<'a> {
    receiver: &'a str,
    ir_file: &'a str,
    distance_m: f64,
    bands: Vec<BandRow<'a>>,
}

#[derive(Serialize)]
struct NoiseSummary<'a> {
    spectrum: &'a BandSpectrum,
    #[serde(with = "sentinel")]
    level_dba: f64,
}

#[derive(Serialize)]
struct AnalyzeScenario<'a> {
    source: &'a str,
    positions: Vec<PositionReport<'a>>,
    spatial_average: Option<Vec<SpatialAverage>>,
    compliance: Option<ComplianceReport>,
    noise: Option<NoiseSummary<'a>>,
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    session: SessionInfo,
    bands: &'a BandDefinition,
    profile: &'a TargetProfile,
    /// From the room-average T30 at 500 Hz and 1 kHz.
    schroeder_frequency_hz: Option<f64>,
    scenarios: Vec<AnalyzeScenario<'a>>,
}

fn mid_band_t30(averages: &[SpatialAverage]) -> Option<f64> {
    let mid: Vec<f64> = averages
        .iter()
        .filter(|a| (400.0..=1300.0).contains(&a.params.band_center))
        .filter_map(|a| a.params.t30)
        .collect();
    (!mid.is_empty()).then(|| mid.iter().sum::<f64>() / mid.len() as f64)
}

pub fn analyze(path: &Path, bands: Option<BandFraction>, curves: bool, out: &Output) -> Result<Status, CliError> {
    let manifest = Manifest::load(path)?;
    let band_def = report_bands(bands.unwrap_or(manifest.bands));
    let profile = resolve_profile(&manifest, None)?;
    let eval = evaluate(&manifest, &band_def, EvalOptions { sti: false, curves })?;
    out.prepare()?;

    let room_average = averages_of(&eval.all_bands())?.unwrap_or_default();
    let schroeder_frequency_hz =
        mid_band_t30(&room_average).map(|t| schroeder_frequency(&eval.session.geometry, t)).transpose()?;

    let mut scenarios = Vec::new();
    for (scenario, extras) in eval.session.scenarios.iter().zip(&eval.extras) {
        let per_position: Vec<Vec<BandParams>> = scenario.positions.iter().map(|p| p.bands.clone()).collect();
        let spatial = averages_of(&per_position)?;
        let compliance = spatial
            .as_ref()
            .map(|avg| compliance_report(&params_of(avg), &[], scenario.noise.as_ref(), &profile))
            .transpose()?;
        let noise = scenario
            .noise
            .as_ref()
            .map(|s| Ok::<_, CliError>(NoiseSummary { spectrum: s, level_dba: a_weighted_level(s)? }))
            .transpose()?;
        let positions = scenario
            .positions
            .iter()
            .zip(extras)
            .map(|(p, x)| PositionReport {
                receiver: &p.receiver,
                ir_file: &x.ir_file,
                distance_m: x.distance_m,
                bands: p.bands.iter().map(|b| BandRow { params: b, d50: b.d50() }).collect(),
            })
            .collect();
        scenarios.push(AnalyzeScenario { source: &scenario.source, positions, spatial_average: spatial, compliance, noise });
    }

    let status = Status::from_issues(&eval.issues);
    let body = AnalyzeReport {
        session: SessionInfo::from_manifest(&manifest),
        bands: &band_def,
        profile: &profile,
        schroeder_frequency_hz,
        scenarios,
    };
    out.write_report("analyze", status, &eval.issues, &body)?;
    write_analyze_csv(out, &body)?;
    if curves {
        write_curves(out, &eval)?;
    }
    print_analyze(&body);
    Ok(status)
}

fn write_analyze_csv(out: &Output, report: &AnalyzeReport) -> Result<(), CliError> {
    let mut bands = out.csv("bands.csv")?;
    bands.write_record(["scenario", "receiver", "band_hz", "t30_s", "t20_s", "edt_s", "c50_db", "d50", "fit_r2", "warnings"])?;
    let mut averages = out.csv("averages.csv")?;
    averages.write_record([
        "scenario", "band_hz", "t30_s", "t20_s", "edt_s", "c50_db", "t30_positions", "c50_positions", "c50_infinite_excluded",
    ])?;
    let mut compliance = out.csv("compliance.csv")?;
    compliance.write_record(["scenario", "band_hz", "t30_s", "t30_lower_s", "t30_upper_s", "t30_verdict", "c50_db", "c50_verdict"])?;
    let mut noise_rows = Vec::new();

    for s in &report.scenarios {
        for p in &s.positions {
            for b in &p.bands {
                let params = b.params;
                bands.write_record([
                    s.source.to_string(),
                    p.receiver.to_string(),
                    params.band_center.to_string(),
                    cell(params.t30),
                    cell(params.t20),
                    cell(params.edt),
                    cell(params.c50),
                    cell(b.d50),
                    cell(params.fit_r2),
                    params.warnings.join("; "),
                ])?;
            }
        }
        for a in s.spatial_average.iter().flatten() {
            averages.write_record([
                s.source.to_string(),
                a.params.band_center.to_string(),
                cell(a.params.t30),
                cell(a.params.t20),
                cell(a.params.edt),
                cell(a.params.c50),
                a.t30_count.to_string(),
                a.c50_count.to_string(),
                a.c50_infinite_excluded.to_string(),
            ])?;
        }
        if let Some(c) = &s.compliance {
            for (t, k) in c.t30.iter().zip(&c.c50) {
                compliance.write_record([
                    s.source.to_string(),
                    t.band_center.to_string(),
                    cell(t.value),
                    cell(Some(t.lower)),
                    cell(Some(t.upper)),
                    label(&t.verdict),
                    cell(k.value),
                    label(&k.verdict),
                ])?;
            }
        }
        if let Some(n) = &s.noise {
            for (c, l) in n.spectrum.band_centers.iter().zip(&n.spectrum.levels) {
                noise_rows.push([s.source.to_string(), c.to_string(), cell(Some(*l))]);
            }
            noise_rows.push([s.source.to_string(), "A".into(), cell(Some(n.level_dba))]);
        }
    }
    bands.flush().map_err(csv::Error::from)?;
    averages.flush().map_err(csv::Error::from)?;
    compliance.flush().map_err(csv::Error::from)?;
    if !noise_rows.is_empty() {
        let mut noise = out.csv("noise.csv")?;
        noise.write_record(["scenario", "band_hz", "leq_db"])?;
        for row in noise_rows {
            noise.write_record(row)?;
        }
        noise.flush().map_err(csv::Error::from)?;
    }
    Ok(())
}

fn write_curves(out: &Output, eval: &Evaluation) -> Result<(), CliError> {
    let dir = out.subdir("curves")?;
    for (scenario, extras) in eval.session.scenarios.iter().zip(&eval.extras) {
        for (p, x) in scenario.positions.iter().zip(extras) {
            for (b, curve) in p.bands.iter().zip(&x.curves) {
                let name = format!(
                    "{}_{}_{}Hz.csv",
                    file_stem_safe(&scenario.source),
                    file_stem_safe(&p.receiver),
                    b.band_center
                );
                let path = dir.join(name);
                let file = std::fs::File::create(&path).map_err(|source| CliError::Output { path: path.clone(), source })?;
                curve
                    .write_csv(std::io::BufWriter::new(file), curve_stride(curve.sample_rate))
                    .map_err(|source| CliError::Output { path, source })?;
            }
        }
    }
    Ok(())
}

fn print_analyze(report: &AnalyzeReport) {
    println!("session {} ({})", report.session.id, label(&report.session.condition));
    if let Some(f) = report.schroeder_frequency_hz {
        println!("Schroeder frequency {f:.1} Hz");
    }
    for s in &report.scenarios {
        let Some(c) = &s.compliance else {
            println!("{}: no analyzable positions", s.source);
            continue;
        };
        println!("\n{}: spatial average over {} position(s)", s.source, s.positions.len());
        println!("{:>8} {:>8} {:>15} {:>10} {:>9} {:>12}", "band Hz", "T30 s", "target s", "verdict", "C50 dB", "verdict");
        for (t, k) in c.t30.iter().zip(&c.c50) {
            println!(
                "{:>8} {:>8} {:>15} {:>10} {:>9} {:>12}",
                t.band_center,
                text(t.value, 2),
                format!("{:.2}-{:.2}", t.lower, t.upper),
                label(&t.verdict),
                text(k.value, 1),
                label(&k.verdict)
            );
        }
        if let Some(n) = &c.noise {
            println!("ambient noise {} dB(A), limit {} dB(A): {}", text(Some(n.level_dba), 1), n.limit_dba, label(&n.verdict));
        }
    }
}

#[derive(Serialize)]
struct StiPosition<'a> {
    receiver: &'a str,
    distance_m: f64,
    sti: f64,
    rating: StiRating,
    check: StiCheck,
    result: &'a StiResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    without_noise: Option<&'a StiResult>,
}

#[derive(Serialize)]
struct StiScenario<'a> {
    source: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<&'a BandSpectrum>,
    positions: Vec<StiPosition<'a>>,
}

#[derive(Serialize)]
struct StiReport<'a> {
    session: SessionInfo,
    model: &'static str,
    with_noise: bool,
    emphasis: Gender,
    profile: &'a TargetProfile,
    scenarios: Vec<StiScenario<'a>>,
}

pub fn sti(
    path: &Path,
    with_noise: Option<bool>,
    gender: Option<Gender>,
    bands: Option<BandFraction>,
    out: &Output,
) -> Result<Status, CliError> {
    let manifest = Manifest::load(path)?;
    let with_noise = with_noise.unwrap_or(manifest.sti_noise);
    let emphasis = gender.unwrap_or(manifest.gender);
    if with_noise {
        if let Some(s) = manifest.scenarios.iter().find(|s| s.noise.is_none()) {
            return Err(CliError::MissingNoise { scenario: s.source.clone() });
        }
    }
    let profile = resolve_profile(&manifest, None)?;
    let band_def = report_bands(bands.unwrap_or(manifest.bands));
    let eval = evaluate(&manifest, &band_def, EvalOptions { sti: true, curves: false })?;
    out.prepare()?;

    let mut scenarios = Vec::new();
    for (scenario, extras) in eval.session.scenarios.iter().zip(&eval.extras) {
        let mut positions = Vec::new();
        for (p, x) in scenario.positions.iter().zip(extras) {
            let chosen = if with_noise { p.sti_with_noise.as_ref() } else { p.sti_without_noise.as_ref() };
            // with-noise results are absent only when the noise file failed, already an issue
            let Some(result) = chosen else { continue };
            let check = check_sti(std::slice::from_ref(result), &profile)?.remove(0);
            let sti = result.sti(emphasis);
            positions.push(StiPosition {
                receiver: &p.receiver,
                distance_m: x.distance_m,
                sti,
                rating: if emphasis == Gender::Male { result.rating_male } else { result.rating_female },
                check,
                result,
                without_noise: if with_noise { p.sti_without_noise.as_ref() } else { None },
            });
        }
        scenarios.push(StiScenario {
            source: &scenario.source,
            noise: if with_noise { eval.sti_noise.get(&scenario.source) } else { None },
            positions,
        });
    }

    let status = Status::from_issues(&eval.issues);
    let body = StiReport {
        session: SessionInfo::from_manifest(&manifest),
        model: STI_MODEL,
        with_noise,
        emphasis,
        profile: &profile,
        scenarios,
    };
    out.write_report("sti", status, &eval.issues, &body)?;

    let mut table = out.csv("sti.csv")?;
    table.write_record([
        "scenario", "receiver", "distance_m", "noise_included", "sti_male", "sti_female", "rating_male", "rating_female",
        "verdict",
    ])?;
    let mut mtf = out.csv("mtf.csv")?;
    mtf.write_record(["scenario", "receiver", "band_hz", "modulation_hz", "m"])?;
    let grid = roomacoustics::sti::ModulationGrid::default();
    for s in &body.scenarios {
        for p in &s.positions {
            let r = p.result;
            table.write_record([
                s.source.to_string(),
                p.receiver.to_string(),
                p.distance_m.to_string(),
                r.noise_included.to_string(),
                cell(Some(r.sti_male)),
                cell(Some(r.sti_female)),
                r.rating_male.to_string(),
                r.rating_female.to_string(),
                label(&p.check.verdict),
            ])?;
            for (band, row) in grid.octave_bands.iter().zip(&r.mtf) {
                for (fm, m) in grid.modulation_frequencies.iter().zip(row) {
                    mtf.write_record([
                        s.source.to_string(),
                        p.receiver.to_string(),
                        band.to_string(),
                        fm.to_string(),
                        cell(Some(*m)),
                    ])?;
                }
            }
        }
    }
    table.flush().map_err(csv::Error::from)?;
    mtf.flush().map_err(csv::Error::from)?;

    println!(
        "STI ({}, {}, {} emphasis)",
        STI_MODEL,
        if with_noise { "with noise" } else { "without noise" },
        label(&emphasis)
    );
    println!("{:>8} {:>8} {:>8} {:>8} {:>10} {:>8}", "source", "receiver", "male", "female", "rating", "verdict");
    for s in &body.scenarios {
        for p in &s.positions {
            println!(
                "{:>8} {:>8} {:>8.3} {:>8.3} {:>10} {:>8}",
                s.source,
                p.receiver,
                p.result.sti_male,
                p.result.sti_female,
                p.rating.to_string(),
                label(&p.check.verdict)
            );
        }
    }
    Ok(status)
}

#[derive(Serialize)]
struct CompareReport<'a> {
    before: SessionInfo,
    after: SessionInfo,
    comparison: &'a SessionComparison,
}

pub fn compare(before: &Path, after: &Path, bands: Option<BandFraction>, out: &Output) -> Result<Status, CliError> {
    let mb = Manifest::load(before)?;
    let ma = Manifest::load(after)?;
    let band_def = report_bands(bands.unwrap_or(mb.bands));
    let options = EvalOptions { sti: true, curves: false };
    let eb = evaluate(&mb, &band_def, options)?;
    let ea = evaluate(&ma, &band_def, options)?;
    let comparison = compare_sessions(&eb.session, &ea.session)?;
    out.prepare()?;

    let issues: Vec<_> = eb.issues.iter().chain(&ea.issues).cloned().collect();
    let status = Status::from_issues(&issues);
    let body = CompareReport { before: SessionInfo::from_manifest(&mb), after: SessionInfo::from_manifest(&ma), comparison: &comparison };
    out.write_report("compare", status, &issues, &body)?;

    for (name, unit, pick) in [
        ("compare_t30.csv", "s", (|s: &roomacoustics::compliance::ScenarioDelta| &s.t30) as fn(&_) -> &_),
        ("compare_c50.csv", "db", |s| &s.c50),
    ] {
        let mut w = out.csv(name)?;
        w.write_record([
            "scenario".to_string(),
            "band_hz".into(),
            format!("before_{unit}"),
            format!("after_{unit}"),
            format!("delta_{unit}"),
            "delta_pct".into(),
        ])?;
        for s in &comparison.scenarios {
            for d in pick(s) {
                w.write_record([
                    s.source.clone(),
                    d.band_center.to_string(),
                    cell(d.before),
                    cell(d.after),
                    cell(d.delta),
                    cell(d.delta_pct),
                ])?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
    }

    let mut positions = out.csv("compare_positions.csv")?;
    positions.write_record([
        "scenario", "receiver", "band_hz", "t30_before_s", "t30_after_s", "t30_delta_s", "t30_delta_pct", "c50_before_db",
        "c50_after_db", "c50_delta_db",
    ])?;
    let mut sti = out.csv("compare_sti.csv")?;
    sti.write_record([
        "scenario", "receiver", "noise_included", "before", "after", "delta", "delta_male", "delta_female", "transition",
    ])?;
    for p in &comparison.positions {
        for (t, c) in p.t30.iter().zip(&p.c50) {
            positions.write_record([
                p.source.clone(),
                p.receiver.clone(),
                t.band_center.to_string(),
                cell(t.before),
                cell(t.after),
                cell(t.delta),
                cell(t.delta_pct),
                cell(c.before),
                cell(c.after),
                cell(c.delta),
            ])?;
        }
        for (noise, d) in [(true, &p.sti_with_noise), (false, &p.sti_without_noise)] {
            if let Some(d) = d {
                sti.write_record([
                    p.source.clone(),
                    p.receiver.clone(),
                    noise.to_string(),
                    cell(Some(d.before)),
                    cell(Some(d.after)),
                    cell(Some(d.delta)),
                    cell(Some(d.delta_male)),
                    cell(Some(d.delta_female)),
                    d.transition.clone(),
                ])?;
            }
        }
    }
    positions.flush().map_err(csv::Error::from)?;
    sti.flush().map_err(csv::Error::from)?;

    println!("{} → {}", mb.session_id, ma.session_id);
    println!("{:>8} {:>8} {:>10} {:>10} {:>16}", "source", "receiver", "ΔSTI", "noise", "rating");
    for p in &comparison.positions {
        if let Some(d) = p.sti_with_noise.as_ref().or(p.sti_without_noise.as_ref()) {
            let noise = if p.sti_with_noise.is_some() { "with" } else { "without" };
            println!("{:>8} {:>8} {:>+10.3} {:>10} {:>16}", p.source, p.receiver, d.delta, noise, d.transition);
        }
    }
    for s in &comparison.scenarios {
        let t30: Vec<String> = s
            .t30
            .iter()
            .map(|d| format!("{}:{}%", d.band_center, text(d.delta_pct, 0)))
            .collect();
        println!("{} ΔT30 {}", s.source, t30.join(" "));
    }
    for u in &comparison.unmatched {
        println!("unmatched: {u}");
    }
    Ok(status)
}

#[derive(Serialize)]
struct AdviseReport<'a> {
    session: SessionInfo,
    profile: &'a TargetProfile,
    room_average: &'a [SpatialAverage],
    advisor: &'a AdvisorReport,
}

pub fn advise(path: &Path, target: Option<&str>, bands: Option<BandFraction>, out: &Output) -> Result<Status, CliError> {
    let manifest = Manifest::load(path)?;
    let profile = resolve_profile(&manifest, target)?;
    let band_def = report_bands(bands.unwrap_or(manifest.bands));
    let eval = evaluate(&manifest, &band_def, EvalOptions::default())?;
    out.prepare()?;

    let room_average = averages_of(&eval.all_bands())?.unwrap_or_default();
    let advisor = sabine_advisor(
        &eval.session.geometry,
        &params_of(&room_average),
        &profile,
        manifest.surfaces.as_ref(),
        &AdvisorOptions::default(),
    )?;
    let status = Status::from_issues(&eval.issues);
    let body = AdviseReport { session: SessionInfo::from_manifest(&manifest), profile: &profile, room_average: &room_average, advisor: &advisor };
    out.write_report("advise", status, &eval.issues, &body)?;

    let mut w = out.csv("advise.csv")?;
    w.write_record(["band_hz", "current_t30_s", "target_s", "added_absorption_m2", "note"])?;
    for b in &advisor.bands {
        w.write_record([
            b.band_center.to_string(),
            cell(b.current_t30),
            cell(Some(b.target)),
            cell(b.added_absorption),
            b.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;

    println!("{:>8} {:>8} {:>8} {:>10}", "band Hz", "T30 s", "target", "add m2");
    for b in &advisor.bands {
        println!(
            "{:>8} {:>8} {:>8.2} {:>10} {}",
            b.band_center,
            text(b.current_t30, 2),
            b.target,
            text(b.added_absorption, 1),
            b.note.as_deref().unwrap_or("")
        );
    }
    if let Some(c) = &advisor.coverage {
        println!(
            "absorber area {:.1} m2 at nominal alpha: ceiling {:.0}%, walls {:.0}% (guideline {})",
            c.absorber_area,
            100.0 * c.ceiling_fraction,
            100.0 * c.wall_fraction,
            c.guideline
        );
    }
    for g in &advisor.guidance {
        println!("{g}");
    }
    Ok(status)
}
