use toda_ps::analysis::{self, angle_field, fd_partials, frames, fundamental_forms, normal_sign_comparison, Breaks};
use toda_ps::config::RunConfig;
use toda_ps::oracle::pseudosphere_surface;
use toda_ps::pipeline::{verify_lambda, Pipeline};
use toda_ps::potentials::Preset;
use toda_ps::reparam::chebyshev_normalize;
use toda_ps::sym::procrustes;

fn pipeline(preset: Preset, n: usize) -> Pipeline {
    let mut c = RunConfig::from_preset(preset);
    c.resolution = n;
    Pipeline::build(&c).unwrap()
}

fn invariant(p: &Pipeline, lambda: f64, name: &str) -> f64 {
    let ls = p.surface(lambda).unwrap();
    let (r, _) = verify_lambda(p, &ls);
    r.invariants.iter().find(|i| i.name == name).unwrap().value
}

#[test]
fn chebyshev_normalization_of_lambda_two_surface() {
    let p = pipeline(Preset::Pseudosphere, 129);
    let ls = p.surface(2.0).unwrap();
    let c = chebyshev_normalize(&ls.surface, &ls.derivs.fx, &ls.derivs.fy, 1e-8).unwrap();
    let g = p.grid;
    for i in 0..g.nx() {
        assert!((c.s.s[i] - 2.0 * g.x.at(i)).abs() < 1e-9, "s({}) = {}", g.x.at(i), c.s.s[i]);
    }
    for j in 0..g.ny() {
        assert!((c.t.s[j] - 0.5 * g.y.at(j)).abs() < 1e-9);
    }
    for k in 0..c.surface.grid.len() {
        assert!((c.fs[k].norm_squared() - 1.0).abs() < 1e-6);
        assert!((c.ft[k].norm_squared() - 1.0).abs() < 1e-6);
    }
    let (nx, ny) = fd_partials(&c.surface.n_field(), analysis::DEFAULT_ORDER, &Breaks::none());
    let forms = fundamental_forms(&c.fs, &c.ft, &nx, &ny, analysis::REGULARITY_THRESHOLD);
    let omega = angle_field(&c.surface, &c.fs, &c.ft).omega;
    let mut checked = 0;
    for k in 0..forms.k.len() {
        if omega.data[k].sin().abs() > analysis::SIN_CUT && forms.regular[k] {
            assert!((forms.k[k] + 1.0).abs() < 1e-3, "K = {}", forms.k[k]);
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn unit_lambda_chebyshev_map_is_identity() {
    let p = pipeline(Preset::C0Kink { amplitude: 0.5 }, 65);
    let ls = p.surface(1.0).unwrap();
    let c = chebyshev_normalize(&ls.surface, &ls.derivs.fx, &ls.derivs.fy, 1e-8).unwrap();
    assert!(c.s.identity_defect() < 1e-9);
    assert!(c.t.identity_defect() < 1e-9);
}

#[test]
fn pseudosphere_normals_match_closed_form_after_alignment() {
    let p = pipeline(Preset::Pseudosphere, 65);
    let s = p.surface(1.0).unwrap().surface;
    let exact = pseudosphere_surface(p.grid);
    let (motion, err) = procrustes(&s.f, &exact.f);
    assert!(err < 1e-3);
    assert!((motion.rotation.determinant() - 1.0).abs() < 1e-12);
    let worst = s.n.iter().zip(&exact.n).map(|(a, b)| (motion.rotation * a - b).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-4, "normal deviation {worst:e}");
}

#[test]
fn recovered_angle_equals_connection_angle() {
    for preset in [Preset::Pseudosphere, Preset::C0Kink { amplitude: 0.5 }] {
        let p = pipeline(preset, 129);
        for lambda in [0.5, 2.0] {
            assert!(invariant(&p, lambda, "angle residual") < 1e-4, "{preset:?} {lambda}");
        }
    }
}

#[test]
fn kink_surface_satisfies_sine_gordon_and_torsion_away_from_kinks() {
    let p = pipeline(Preset::C0Kink { amplitude: 0.5 }, 129);
    assert!(invariant(&p, 1.0, "sine-Gordon residual") < 1e-3);
    assert!(invariant(&p, 1.0, "torsion residual") < 1e-2);
    assert!(invariant(&p, 1.0, "front-from-normal residual") < 1e-3);
}

#[test]
fn normal_sign_follows_sin_omega() {
    let p = pipeline(Preset::Pseudosphere, 129);
    let ls = p.surface(1.0).unwrap();
    let omega = p.conn.angle_field();
    let r = normal_sign_comparison(&ls.derivs.fx, &ls.derivs.fy, &ls.surface.n, &omega, analysis::SIN_CUT, 1e-8);
    assert_eq!(r.violations, 0);
    assert!(r.agree > 0 && r.opposite > 0);
    assert_eq!(r.agree + r.opposite, r.checked);
    // sin ω > 0 exactly on x + y < 0 for this surface
    let g = p.grid;
    for k in 0..g.len() {
        let (x, y) = g.point(g.ij(k).0, g.ij(k).1);
        if (x + y).abs() > 0.1 {
            assert_eq!(omega.data[k].sin() > 0.0, x + y < 0.0, "({x}, {y})");
        }
    }
}

#[test]
fn frames_along_pipeline_surface_are_orthonormal() {
    let p = pipeline(Preset::C0Kink { amplitude: 0.5 }, 65);
    let ls = p.surface(2.0).unwrap();
    let omega = angle_field(&ls.surface, &ls.derivs.fx, &ls.derivs.fy).omega;
    let f = frames(&ls.surface, &ls.derivs.fx, &omega);
    assert!(f.max_det_defect() < 1e-10);
}
