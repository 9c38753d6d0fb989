//! `omnistereo`: analyze, optimize and exercise a folded catadioptric
//! omnistereo rig from the command line.
//!
//! Exit status: 0 on success, 1 on domain errors, 2 on usage errors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use omnistereo::analysis::{
    fov_report, imaging_ratio, k1_baseline_series, r_sys_for_alpha1, resolution_profile,
    size_mass, stereo_roi,
};
use omnistereo::harness::rmse_experiment;
use omnistereo::optimizer::{
    optimize_multistart, ConstraintSet, OptimizeOptions, SolveStatus, CONSTRAINT_NAMES,
};
use omnistereo::panorama::{
    build_lut, match_columns, panorama_geometry, read_lut, rectify, write_lut, Interpolation,
    PanoramaSize,
};
use omnistereo::pnm::{encode_pnm, read_pnm};
use omnistereo::triangulation::{propagate_uncertainty, range_sweep, triangulate_midpoint};
use omnistereo::{load_spec, Mirror, PixelPoint, RigGeometry, RigSpec};

#[derive(Parser)]
#[command(name = "omnistereo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Rig configuration file (flat key = value format).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize the stereo baseline under the design constraints.
    Optimize {
        #[command(flatten)]
        config: ConfigArg,
        /// System height limit (mm).
        #[arg(long = "h-max", default_value_t = 150.0)]
        h_max: f64,
        /// Payload (total mass) limit (g).
        #[arg(long, default_value_t = 650.0)]
        payload: f64,
        /// Number of multistart seeds.
        #[arg(long, default_value_t = 16)]
        seeds: usize,
        /// RNG seed for the start draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Report FOV angles, stereo ROI, resolution, size and mass.
    Analyze {
        #[command(flatten)]
        config: ConfigArg,
        /// Output report (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional flat CSV with the same scalars and resolution samples.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build a panorama lookup table for one mirror.
    Lut {
        #[command(flatten)]
        config: ConfigArg,
        /// Mirror index (1 or 2).
        #[arg(long)]
        mirror: u8,
        /// Panorama width in pixels (give width or height, not both).
        #[arg(long, conflicts_with = "height")]
        width: Option<usize>,
        /// Panorama height in pixels.
        #[arg(long)]
        height: Option<usize>,
        /// Output LUT file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Remap an omnidirectional image into a panorama through a LUT.
    Rectify {
        #[command(flatten)]
        config: ConfigArg,
        /// LUT produced by `lut` for the same config.
        #[arg(long)]
        lut: PathBuf,
        /// Input omnidirectional image (PGM/PPM).
        #[arg(long)]
        image: PathBuf,
        /// Output panorama (same flavor as the input).
        #[arg(long)]
        out: PathBuf,
        /// Nearest-neighbor sampling instead of bilinear.
        #[arg(long)]
        nearest: bool,
    },
    /// Column-scan block matching between two rectified panoramas.
    Match {
        #[command(flatten)]
        config: ConfigArg,
        /// Reference panorama (PGM/PPM).
        #[arg(long)]
        reference: PathBuf,
        /// Target panorama searched downward for matches.
        #[arg(long)]
        target: PathBuf,
        /// Correlation window side (odd).
        #[arg(long, default_value_t = 7)]
        window: usize,
        /// Largest row offset searched (px).
        #[arg(long = "max-disparity", default_value_t = 100)]
        max_disparity: usize,
        /// Output CSV of "u,v,disparity" for valid cells.
        #[arg(long)]
        out: PathBuf,
    },
    /// Triangulate "u1 v1 u2 v2" correspondences into a point cloud.
    Triangulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Correspondence file: whitespace-separated "u1 v1 u2 v2" lines.
        #[arg(long)]
        pairs: PathBuf,
        /// Output cloud: "x y z r g b" lines, mm.
        #[arg(long)]
        out: PathBuf,
        /// Append the 6 upper-triangle covariance columns.
        #[arg(long)]
        covariance: bool,
        /// Pixel noise standard deviation for the covariance (px).
        #[arg(long = "sigma-px", default_value_t = 1.0)]
        sigma_px: f64,
    },
    /// Tabulate horizontal range against integer pixel disparity.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Largest disparity to tabulate (px).
        #[arg(long = "max-disparity", default_value_t = 100)]
        max_disparity: u32,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the synthetic chessboard-ring RMSE experiment.
    Verify {
        #[command(flatten)]
        config: ConfigArg,
        /// Pixel noise sigma (px).
        #[arg(long = "noise-px", default_value_t = 0.1)]
        noise_px: f64,
        /// RNG seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Comma-separated horizontal ranges (mm).
        #[arg(long, value_delimiter = ',', default_values_t = vec![250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0])]
        ranges: Vec<f64>,
        /// Output CSV of the RMSE table.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Writes through a temp file and renames, so outputs are never partial.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn load_geometry(config: &ConfigArg) -> Result<(RigSpec, RigGeometry)> {
    let spec = load_spec(&config.config)
        .with_context(|| format!("loading {}", config.config.display()))?;
    eprintln!("spec {:016x} ({})", spec.spec_hash(), config.config.display());
    let geom = RigGeometry::new(&spec).context("deriving mirror surfaces")?;
    Ok((spec, geom))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Optimize { config, h_max, payload, seeds, seed, out } => {
            let (spec, _) = load_geometry(&config)?;
            let cs = ConstraintSet::with_limits(spec, h_max, payload);
            let opts = OptimizeOptions { seeds, seed, ..OptimizeOptions::default() };
            let report = optimize_multistart(&cs, &opts);
            if report.best.status == SolveStatus::Infeasible {
                eprintln!("warning: no feasible design found; reporting least-violating point");
            }
            let named: Vec<_> = CONSTRAINT_NAMES
                .iter()
                .zip(report.best.violations.iter())
                .map(|(n, v)| serde_json::json!({ "constraint": n, "value_native": v }))
                .collect();
            let doc = serde_json::json!({
                "seed": report.seed,
                "theta_star": report.best.theta,
                "b_star_mm": report.best.baseline_mm,
                "status": report.best.status,
                "max_violation": report.best.max_violation,
                "h1_residual": report.best.h1_residual,
                "constraints": named,
                "active_constraints": report.active_constraints,
                "multipliers": report.best.multipliers,
                "iterations": report.best.iterations,
                "runs": report.runs.iter().map(|r| serde_json::json!({
                    "start": r.start,
                    "baseline_mm": r.baseline_mm,
                    "max_violation": r.max_violation,
                    "status": r.status,
                    "evaluations": r.n_evaluations,
                })).collect::<Vec<_>>(),
            });
            write_atomic(&out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
            println!("b* = {:.3} mm ({:?})", report.best.baseline_mm, report.best.status);
            Ok(())
        }
        Command::Analyze { config, out, csv } => {
            let (spec, geom) = load_geometry(&config)?;
            let fov = fov_report(&geom);
            let mass = size_mass(&geom);
            let roi = stereo_roi(&geom).context("stereo ROI")?;
            let chi = imaging_ratio(&geom).context("imaging ratio")?;
            let res1 = resolution_profile(&geom, Mirror::One, 64);
            let res2 = resolution_profile(&geom, Mirror::Two, 64);
            let (m1, m2) = spec.derive_surfaces().context("surfaces")?;
            let deg = |x: f64| x.to_degrees();

            let res_json = |samples: &[omnistereo::analysis::ResolutionSample]| {
                samples
                    .iter()
                    .map(|s| {
                        serde_json::json!({
                            "theta_deg": deg(s.theta),
                            "eta": s.eta,
                            "eta_2d": s.eta_2d,
                        })
                    })
                    .collect::<Vec<_>>()
            };
            let k1_grid: Vec<f64> = (0..=20).map(|i| 3.0 + 0.5 * i as f64).collect();
            let k_sweep = k1_baseline_series(&spec, &k1_grid);
            let alpha_targets = [30.0_f64, 35.0, 40.0];
            let k_vs_rsys: Vec<_> = alpha_targets
                .iter()
                .map(|a| {
                    let series: Vec<_> = k1_grid
                        .iter()
                        .filter_map(|&k1| {
                            r_sys_for_alpha1(&spec, k1, a.to_radians())
                                .map(|r| serde_json::json!({ "k1": k1, "r_sys_mm": r }))
                        })
                        .collect();
                    serde_json::json!({ "alpha1_deg": a, "series": series })
                })
                .collect();

            let doc = serde_json::json!({
                "spec_hash": format!("{:016x}", spec.spec_hash()),
                "baseline_mm": spec.design.baseline(),
                "h_sys_mm": mass.h_sys,
                "m_sys_g": mass.m_sys,
                "mass_breakdown_g": {
                    "mirrors": mass.m_mirrors, "tube": mass.m_tube, "camera": mass.m_cam,
                },
                "volumes_mm3": {
                    "mirror1": mass.v_mirror1, "mirror2": mass.v_mirror2,
                    "reflex": mass.v_reflex, "tube": mass.v_tube,
                },
                "r_ref_mm": m1.r_min,
                "radial_bounds_mm": {
                    "mirror1": [m1.r_min, m1.r_max], "mirror2": [m2.r_min, m2.r_max],
                },
                "image_radial_bounds_px": {
                    "mirror1": geom.image_radial_bounds(Mirror::One),
                    "mirror2": geom.image_radial_bounds(Mirror::Two),
                },
                "fov_deg": {
                    "theta1_max": deg(fov.theta1_max), "theta1_min": deg(fov.theta1_min),
                    "theta2_max": deg(fov.theta2_max), "theta2_min": deg(fov.theta2_min),
                    "theta2_max_unclipped": deg(fov.theta2_max_unclipped),
                    "alpha1": deg(fov.alpha1), "alpha2": deg(fov.alpha2),
                    "alpha_sys": deg(fov.alpha_sys),
                    "alpha_sys_unclipped": deg(fov.alpha_sys_unclipped),
                    "alpha_sroi": deg(fov.alpha_sroi),
                    "alpha_cam_min": deg(fov.alpha_cam_min),
                    "alpha_cam_max": deg(fov.alpha_cam_max),
                    "camera_feasible": fov.camera_feasible,
                },
                "stereo_roi_mm": {
                    "p_high": roi.p_high, "p_mid": roi.p_mid, "p_low": roi.p_low,
                    "far_bound": roi.far_bound,
                },
                "imaging_ratio": chi,
                "resolution": { "mirror1": res_json(&res1), "mirror2": res_json(&res2) },
                "k1_baseline_sweep": k_sweep,
                "k_vs_rsys": k_vs_rsys,
            });
            write_atomic(&out, serde_json::to_string_pretty(&doc)?.as_bytes())?;

            if let Some(csv_path) = csv {
                let mut text = String::from("quantity,mirror,x,value\n");
                let scalars = [
                    ("baseline_mm", spec.design.baseline()),
                    ("h_sys_mm", mass.h_sys),
                    ("m_sys_g", mass.m_sys),
                    ("r_ref_mm", m1.r_min),
                    ("imaging_ratio", chi),
                    ("theta1_max_deg", deg(fov.theta1_max)),
                    ("theta1_min_deg", deg(fov.theta1_min)),
                    ("theta2_max_deg", deg(fov.theta2_max)),
                    ("theta2_min_deg", deg(fov.theta2_min)),
                    ("alpha_sroi_deg", deg(fov.alpha_sroi)),
                    ("alpha_sys_deg", deg(fov.alpha_sys)),
                    ("alpha_sys_unclipped_deg", deg(fov.alpha_sys_unclipped)),
                    ("alpha_cam_min_deg", deg(fov.alpha_cam_min)),
                    ("alpha_cam_max_deg", deg(fov.alpha_cam_max)),
                    ("p_high_rho_mm", roi.p_high.0),
                    ("p_high_z_mm", roi.p_high.1),
                    ("p_mid_rho_mm", roi.p_mid.0),
                    ("p_mid_z_mm", roi.p_mid.1),
                    ("p_low_rho_mm", roi.p_low.0),
                    ("p_low_z_mm", roi.p_low.1),
                ];
                for (name, value) in scalars {
                    text.push_str(&format!("{name},,,{value:.6}\n"));
                }
                for (mirror, samples) in [(1, &res1), (2, &res2)] {
                    for s in samples.iter() {
                        text.push_str(&format!(
                            "eta,{mirror},{:.6},{:.6}\n",
                            deg(s.theta),
                            s.eta
                        ));
                    }
                }
                write_atomic(&csv_path, text.as_bytes())?;
            }
            println!(
                "h_sys = {:.2} mm, m_sys = {:.1} g, alpha_SROI = {:.2} deg",
                mass.h_sys,
                mass.m_sys,
                deg(fov.alpha_sroi)
            );
            Ok(())
        }
        Command::Lut { config, mirror, width, height, out } => {
            let (_, geom) = load_geometry(&config)?;
            let mirror = Mirror::from_index(mirror)
                .ok_or_else(|| anyhow::anyhow!("mirror must be 1 or 2"))?;
            let size = match (width, height) {
                (Some(w), None) => PanoramaSize::Width(w),
                (None, Some(h)) => PanoramaSize::Height(h),
                (None, None) => PanoramaSize::Width(1280),
                (Some(_), Some(_)) => bail!("give either --width or --height"),
            };
            let pano = panorama_geometry(&geom, size)?;
            let lut = build_lut(&geom, &pano, mirror);
            write_lut(&out, &lut)?;
            println!(
                "lut mirror {} {}x{} ({} valid cells)",
                mirror,
                lut.w_pan,
                lut.h_pan,
                lut.valid_count()
            );
            Ok(())
        }
        Command::Rectify { config, lut, image, out, nearest } => {
            let (_, geom) = load_geometry(&config)?;
            let lut = read_lut(&lut)?;
            let image = read_pnm(&image)?;
            let interp = if nearest { Interpolation::Nearest } else { Interpolation::Bilinear };
            let pano = rectify(&geom, &image, &lut, interp)?;
            write_atomic(&out, &encode_pnm(&pano))?;
            Ok(())
        }
        Command::Match { config, reference, target, window, max_disparity, out } => {
            // The matcher itself is geometry-free; the config pins the rig
            // the panoramas came from in the provenance log.
            let _ = load_geometry(&config)?;
            let reference = read_pnm(&reference)?.to_gray();
            let target = read_pnm(&target)?.to_gray();
            let map = match_columns(&reference, &target, window, max_disparity)?;
            let mut text = String::from("u,v,disparity\n");
            for v in 0..map.height {
                for u in 0..map.width {
                    let d = map.get(u, v);
                    if d.is_finite() {
                        text.push_str(&format!("{u},{v},{d:.3}\n"));
                    }
                }
            }
            write_atomic(&out, text.as_bytes())?;
            println!("{} valid matches", map.valid_count());
            Ok(())
        }
        Command::Triangulate { config, pairs, out, covariance, sigma_px } => {
            let (_, geom) = load_geometry(&config)?;
            let text = std::fs::read_to_string(&pairs)
                .with_context(|| format!("reading {}", pairs.display()))?;
            let mut cloud = String::new();
            let mut n_ok = 0usize;
            for (idx, line) in text.lines().enumerate() {
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                let vals: Vec<f64> =
                    t.split_whitespace().filter_map(|s| s.parse().ok()).collect();
                if vals.len() != 4 {
                    bail!("line {}: expected `u1 v1 u2 v2`, got `{t}`", idx + 1);
                }
                if !vals.iter().all(|v| v.is_finite()) {
                    continue;
                }
                let m1 = PixelPoint::image(vals[0], vals[1]);
                let m2 = PixelPoint::image(vals[2], vals[3]);
                let Ok(point) = triangulate_midpoint(&geom, &m1, &m2) else {
                    continue;
                };
                let p = point.position;
                cloud.push_str(&format!("{:.4} {:.4} {:.4} 200 200 200", p.x, p.y, p.z));
                if covariance {
                    let cov = propagate_uncertainty(&geom, &m1, &m2, sigma_px)?;
                    cloud.push_str(&format!(
                        " {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
                        cov[(0, 0)],
                        cov[(0, 1)],
                        cov[(0, 2)],
                        cov[(1, 1)],
                        cov[(1, 2)],
                        cov[(2, 2)]
                    ));
                }
                cloud.push('\n');
                n_ok += 1;
            }
            write_atomic(&out, cloud.as_bytes())?;
            println!("{n_ok} points");
            Ok(())
        }
        Command::Sweep { config, max_disparity, out } => {
            let (_, geom) = load_geometry(&config)?;
            let rows = range_sweep(&geom, max_disparity);
            if rows.is_empty() {
                bail!("range sweep produced no rows (equatorial ray not imaged)");
            }
            let mut text = String::from("disparity_px,rho_mm,delta_rho_mm\n");
            for row in &rows {
                if row.delta_rho_mm.is_finite() {
                    text.push_str(&format!(
                        "{},{:.3},{:.3}\n",
                        row.disparity_px, row.rho_mm, row.delta_rho_mm
                    ));
                } else {
                    text.push_str(&format!("{},{:.3},\n", row.disparity_px, row.rho_mm));
                }
            }
            write_atomic(&out, text.as_bytes())?;
            println!(
                "max range at 1 px disparity: {:.2} m",
                rows[0].rho_mm / 1000.0
            );
            Ok(())
        }
        Command::Verify { config, noise_px, seed, ranges, out } => {
            let (_, geom) = load_geometry(&config)?;
            let rows = rmse_experiment(&geom, &ranges, noise_px, seed)?;
            let mut text = String::from("range_mm,rmse_mm,sd_mm,points\n");
            for r in &rows {
                text.push_str(&format!(
                    "{:.1},{:.4},{:.4},{}\n",
                    r.range_mm, r.rmse_mm, r.sd_mm, r.points
                ));
            }
            write_atomic(&out, text.as_bytes())?;

            let mut ok = true;
            let increasing = rows.windows(2).all(|w| w[1].rmse_mm > w[0].rmse_mm);
            println!(
                "{} rmse strictly increasing with range",
                if increasing { "PASS" } else { "FAIL" }
            );
            ok &= increasing;
            let at = |mm: f64| rows.iter().find(|r| (r.range_mm - mm).abs() < 1.0);
            if let Some(r2) = at(2000.0) {
                let within = r2.rmse_mm >= 14.85 / 3.0 && r2.rmse_mm <= 14.85 * 3.0;
                println!(
                    "{} rmse(2 m) = {:.2} mm within factor 3 of 14.85 mm",
                    if within { "PASS" } else { "FAIL" },
                    r2.rmse_mm
                );
                ok &= within;
                if let Some(r8) = at(8000.0) {
                    let ratio = r8.rmse_mm / r2.rmse_mm;
                    let within = (8.0..=25.0).contains(&ratio);
                    println!(
                        "{} rmse(8 m)/rmse(2 m) = {:.2} in [8, 25]",
                        if within { "PASS" } else { "FAIL" },
                        ratio
                    );
                    ok &= within;
                }
            }
            if !ok {
                bail!("verification checks failed");
            }
            Ok(())
        }
    }
}
