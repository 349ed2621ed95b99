//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use toda_ps::analysis::{front_from_normal, recover_boundary_angles, Breaks};
use toda_ps::config::RunConfig;
use toda_ps::frame::{birkhoff_split, frame_field, zcc_residual, FrameOptions};
use toda_ps::laurent::{DegreeWindow, TwistedLoop, C64};
use toda_ps::oracle::{goursat_from_spec, pseudosphere_surface};
use toda_ps::pipeline::{verify_lambda, Pipeline};
use toda_ps::potentials::{preset_pseudosphere, Preset};
use toda_ps::reparam::graph_patch;
use toda_ps::sym::{max_distance_up_to_translation, procrustes};

const LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];
const KINK: Preset = Preset::C0Kink { amplitude: 0.5 };

type Outcome = Result<(bool, String), String>;

fn config(preset: Preset, n: usize) -> RunConfig {
    let mut c = RunConfig::from_preset(preset);
    c.resolution = n;
    c
}

fn build(preset: Preset, n: usize) -> Result<Pipeline, String> {
    Pipeline::build(&config(preset, n)).map_err(|e| e.to_string())
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn value(p: &Pipeline, lambda: f64, name: &str) -> Result<f64, String> {
    let ls = p.surface(lambda).map_err(|e| e.to_string())?;
    let (r, _) = verify_lambda(p, &ls);
    r.invariants
        .iter()
        .find(|i| i.name == name)
        .map(|i| i.value)
        .ok_or_else(|| format!("no invariant {name}"))
}

struct Runs {
    pseudo: Pipeline,
    kink: Pipeline,
    vacuum: Pipeline,
    /// Pseudo-sphere at h = 1/64.
    fine: Pipeline,
    seconds: f64,
}

fn c1(r: &Runs) -> Outcome {
    let p = &r.pseudo;
    let ls = p.surface(1.0).map_err(|e| e.to_string())?;
    let exact = pseudosphere_surface(p.grid);
    let (_, err) = procrustes(&ls.surface.f, &exact.f);
    Ok((
        err < 1e-3 && r.seconds < 60.0,
        format!("max node distance {err:.3e} (< 1e-3), pipeline time {:.2} s (< 60 s)", r.seconds),
    ))
}

fn c2(r: &Runs) -> Outcome {
    let mut worst = [0.0f64; 3];
    for p in [&r.pseudo, &r.vacuum, &r.kink] {
        for l in LAMBDAS {
            worst[0] = worst[0].max(value(p, l, "E-lambda^2 residual")?);
            worst[1] = worst[1].max(value(p, l, "G-lambda^-2 residual")?);
            worst[2] = worst[2].max(value(p, l, "F-cos residual")?);
        }
    }
    Ok((
        worst[0] < 1e-8 && worst[1] < 1e-8 && worst[2] < 1e-6,
        format!("|E-λ²| {:.3e}, |G-λ⁻²| {:.3e} (< 1e-8), |F-cos| {:.3e} (< 1e-6); 3 presets x λ ∈ {{1/2,1,2}}", worst[0], worst[1], worst[2]),
    ))
}

fn c3(r: &Runs) -> Outcome {
    let mut w = [0.0f64; 3];
    for p in [&r.pseudo, &r.kink, &r.vacuum] {
        for l in LAMBDAS {
            w[0] = w[0].max(value(p, l, "l residual")?.max(value(p, l, "n residual")?));
            w[1] = w[1].max(value(p, l, "m-sin residual")?);
            w[2] = w[2].max(value(p, l, "K+1 residual")?);
        }
    }
    Ok((
        w[0] < 1e-5 && w[1] < 1e-5 && w[2] < 1e-3,
        format!("|l|,|n| {:.3e}, |m-sin| {:.3e} (< 1e-5), |K+1| {:.3e} (< 1e-3) where |sin ω| > 0.1", w[0], w[1], w[2]),
    ))
}

fn c4(r: &Runs) -> Outcome {
    let coarse = zcc_residual(&r.pseudo.conn, 2).max(None);
    let fine = zcc_residual(&r.fine.conn, 2).max(None);
    let ratio = coarse / fine;
    Ok((
        coarse < 1e-3 && (3.5..=4.5).contains(&ratio),
        format!("residual {coarse:.3e} at h = 1/32 (< 1e-3), {fine:.3e} at h = 1/64, ratio {ratio:.3} (in [3.5, 4.5])"),
    ))
}

fn c5(r: &Runs) -> Outcome {
    let mut errs = Vec::new();
    for p in [&r.pseudo, &r.kink] {
        let sol = goursat_from_spec(&p.spec, p.grid, 1e-12, 200).map_err(|e| e.to_string())?;
        let angle = p.conn.angle_field();
        errs.push(sup(angle.data.iter().zip(&sol.phi.data).map(|(a, b)| a - b)));
    }
    Ok((
        errs.iter().all(|e| *e < 1e-4),
        format!("sup |φ̂+α - φ̃| pseudo-sphere {:.3e}, kink {:.3e} (< 1e-4)", errs[0], errs[1]),
    ))
}

fn c6(r: &Runs) -> Outcome {
    let v = value(&r.fine, 1.0, "harmonicity residual")?;
    Ok((v < 1e-3, format!("max |N_xy - cos ω N| {v:.3e} at h = 1/64 (< 1e-3)")))
}

fn c7(r: &Runs) -> Outcome {
    let p = &r.fine;
    let ls = p.surface(1.0).map_err(|e| e.to_string())?;
    let (rep, _) = verify_lambda(p, &ls);
    let v = rep.invariants.iter().find(|i| i.name == "torsion residual").map(|i| i.value).unwrap_or(f64::NAN);
    Ok((
        v < 1e-2 && rep.torsion_samples > 0,
        format!("max ||τ| - 1| {v:.3e} over {} samples with |sin ω| > 0.3 (< 1e-2)", rep.torsion_samples),
    ))
}

fn c8(r: &Runs) -> Outcome {
    let p = &r.pseudo;
    let ls = p.surface(1.0).map_err(|e| e.to_string())?;
    let fr = front_from_normal(&ls.surface.n_field(), 4, &Breaks::none());
    let err = max_distance_up_to_translation(&fr.f, &ls.surface.f);
    Ok((
        err < 1e-3 && fr.max_closure < 1e-6,
        format!("reconstruction error {err:.3e} (< 1e-3), cell closure {:.3e} (< 1e-6)", fr.max_closure),
    ))
}

fn c9(r: &Runs) -> Outcome {
    let mut errs = Vec::new();
    for p in [&r.pseudo, &r.kink] {
        let ls = p.surface(1.0).map_err(|e| e.to_string())?;
        let omega = toda_ps::analysis::angle_field(&ls.surface, &ls.derivs.fx, &ls.derivs.fy).omega;
        let b = recover_boundary_angles(&omega);
        let ea = sup(b.x.iter().zip(&b.alpha).map(|(x, a)| a - p.spec.alpha.eval(*x).unwrap_or(f64::NAN)));
        let eb = sup(b.y.iter().zip(&b.beta).map(|(y, v)| v - p.spec.beta.eval(*y).unwrap_or(f64::NAN)));
        errs.push(ea.max(eb));
    }
    Ok((
        errs.iter().all(|e| *e < 1e-3),
        format!("sup |α̂-α|, |β̂-β| pseudo-sphere {:.3e}, kink {:.3e} (< 1e-3)", errs[0], errs[1]),
    ))
}

fn c10(r: &Runs) -> Outcome {
    let p = &r.pseudo;
    let ls = p.surface(1.0).map_err(|e| e.to_string())?;
    let center = (p.grid.x.nearest(-1.0), p.grid.y.nearest(-1.0));
    let patch = graph_patch(&ls.surface, center, 0.5, 17).map_err(|e| e.to_string())?;
    let (k, a) = (patch.max_k_deviation(), patch.max_normal_angle());
    Ok((
        k < 1e-2 && a < 1e-3,
        format!(
            "max |K+1| {k:.3e} (< 1e-2), max normal angle {a:.3e} rad (< 1e-3); center (-1,-1), radius 0.5, (u,v) half-width {:.3}",
            patch.half_width
        ),
    ))
}

fn random_factors(rng: &mut StdRng) -> (TwistedLoop, TwistedLoop, TwistedLoop) {
    let mut pair = |scale: f64| [0; 2].map(|_| C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)));
    let mut plus: Vec<[C64; 2]> = (0..5).map(|_| pair(0.3)).collect();
    plus[0][0] += 1.0;
    plus[0][1] += 1.0;
    let mut minus: Vec<[C64; 2]> = (0..4).map(|_| pair(0.3)).collect();
    minus.push([C64::new(1.0, 0.0); 2]);
    let lp = TwistedLoop::from_pairs(0, plus).expect("valid");
    let lm = TwistedLoop::from_pairs(-4, minus).expect("valid");
    let inv = lm.inverse(DegreeWindow::new(-60, 0).expect("window")).expect("invertible");
    let g = lp.mul(&inv, DegreeWindow::new(-16, 4).expect("window"));
    (g, lp, lm)
}

fn c11(r: &Runs) -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut round = 0.0f64;
    for _ in 0..200 {
        let (g, lp, lm) = random_factors(&mut rng);
        let s = birkhoff_split(&g, 16).ok_or("singular split")?;
        round = round.max(s.plus.distance(&lp)).max(s.minus.distance(&lm));
    }
    let spec = preset_pseudosphere();
    let grid = r.pseudo.grid;
    let f8 = frame_field(&spec, grid, 8, FrameOptions { keep_factors: false }).map_err(|e| e.to_string())?;
    let (res8, res16) = (f8.max_split_residual(), r.pseudo.frame.max_split_residual());
    let drop = res8 / res16;
    Ok((
        round < 1e-10 && drop >= 10.0,
        format!("factor round trip {round:.3e} (< 1e-10, 200 cases); split residual {res8:.3e} at N=8, {res16:.3e} at N=16, drop {drop:.3e} (>= 10)"),
    ))
}

fn c12(r: &Runs) -> Outcome {
    let u = [&r.pseudo, &r.kink, &r.vacuum]
        .iter()
        .map(|p| p.frame.unitarity(&LAMBDAS).max())
        .fold(0.0, f64::max);
    Ok((u < 1e-8, format!("max unitarity/determinant residual {u:.3e} (< 1e-8), λ ∈ {{1/2,1,2}}, 3 presets")))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let pseudo = match build(Preset::Pseudosphere, 129) {
        Ok(p) => p,
        Err(e) => {
            println!("FAIL  setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let seconds = {
        let s = pseudo.surface(1.0).map(|_| start.elapsed().as_secs_f64());
        s.unwrap_or(f64::INFINITY)
    };
    let rest = (|| -> Result<_, String> { Ok((build(KINK, 129)?, build(Preset::Vacuum, 129)?, build(Preset::Pseudosphere, 257)?)) })();
    let (kink, vacuum, fine) = match rest {
        Ok(v) => v,
        Err(e) => {
            println!("FAIL  setup: {e}");
            return ExitCode::FAILURE;
        }
    };
    let runs = Runs { pseudo, kink, vacuum, fine, seconds };
    let criteria: [(&str, fn(&Runs) -> Outcome); 12] = [
        ("pseudo-sphere reproduction", c1),
        ("first fundamental form", c2),
        ("second form and curvature", c3),
        ("zero-curvature condition", c4),
        ("sine-Gordon oracle", c5),
        ("harmonicity of the normal", c6),
        ("asymptotic-line torsion", c7),
        ("front from normal", c8),
        ("boundary-angle round trip", c9),
        ("graph patch", c10),
        ("Birkhoff split", c11),
        ("unitarity of the frame", c12),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = f(&runs).unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "{}  C{:<2} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
