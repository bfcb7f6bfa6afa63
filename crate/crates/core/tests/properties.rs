use pedflow::forces::MorseKernel;
use pedflow::macro_solver::reaction_update;
use pedflow::metrics::{crossing_time, lp_error, mass_balance};
use pedflow::scenario::Scenario;
use pedflow::{Grid, Rect, ReflectionParams, Vec2, WalkableDomain};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(Rect::new(-2.0, 2.0, -1.0, 1.0), 0.25, 0.25, &[]).unwrap()
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..3.0f64, 128)
}

proptest! {
    #[test]
    fn kernel_is_odd(x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let k = MorseKernel::default();
        let d = Vec2::new(x, y);
        prop_assert_eq!(k.eval(-d), -k.eval(d));
    }

    #[test]
    fn kernel_is_radial(x in -5.0..5.0f64, y in -5.0..5.0f64) {
        let d = Vec2::new(x, y);
        prop_assume!(d.norm() > 1e-6);
        let g = MorseKernel::default().eval(d);
        prop_assert!((g.x * d.y - g.y * d.x).abs() <= 1e-12 * (1.0 + g.norm() * d.norm()));
    }

    #[test]
    fn reaction_keeps_sum_and_sign(l0 in 0.0..20.0f64, l1 in 0.0..20.0f64, u0 in 0.0..5.0f64, u1 in 0.0..5.0f64, dt in 0.0..10.0f64) {
        let (a, b) = reaction_update(l0, l1, u0, u1, dt);
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!(((a + b) - (u0 + u1)).abs() <= 1e-14 * (1.0 + u0 + u1));
    }

    #[test]
    fn mass_balance_is_monotone_in_cut(u in field(), c1 in -2.5..2.5f64, c2 in -2.5..2.5f64) {
        let g = grid();
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        prop_assert!(mass_balance(&g, &u, lo) <= mass_balance(&g, &u, hi) + 1e-12);
    }

    #[test]
    fn lp_error_is_a_norm(a in field(), b in field(), s in 0.1..4.0f64) {
        let g = grid();
        let sa: Vec<f64> = a.iter().map(|x| s * x).collect();
        let sb: Vec<f64> = b.iter().map(|x| s * x).collect();
        let e1 = lp_error(&g, &a, &b, 1.0).unwrap();
        let e2 = lp_error(&g, &a, &b, 2.0).unwrap();
        prop_assert!((lp_error(&g, &sa, &sb, 1.0).unwrap() - s * e1).abs() <= 1e-10 * (1.0 + e1));
        prop_assert!((lp_error(&g, &sa, &sb, 2.0).unwrap() - s * e2).abs() <= 1e-10 * (1.0 + e2));
        prop_assert_eq!(lp_error(&g, &a, &a, 1.0).unwrap(), 0.0);
        // ‖f‖₂² ≤ ‖f‖∞ ‖f‖₁
        let sup = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(e2 * e2 <= sup * e1 * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn crossing_time_lies_in_range(values in prop::collection::vec(0.0..1.0f64, 2..20), theta in 0.01..1.0f64) {
        let mut mb: Vec<f64> = values;
        mb.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let times: Vec<f64> = (0..mb.len()).map(|k| k as f64 * 0.5).collect();
        match crossing_time(&times, &mb, theta) {
            Some(t) => {
                prop_assert!(t >= 0.0 && t <= *times.last().unwrap());
                prop_assert!(1.0 - mb.last().unwrap() >= theta - 1e-12);
            }
            None => prop_assert!(1.0 - mb.last().unwrap() < theta),
        }
    }

    #[test]
    fn reflection_keeps_speed_and_points_inward(px in -3.0..3.0f64, py in -1.0..1.0f64, vx in -3.0..3.0f64, vy in -3.0..3.0f64) {
        let domain = Scenario::preset("example2_lambda1").unwrap().domain;
        let p = Vec2::new(px, py);
        prop_assume!(domain.contains(p));
        let v = Vec2::new(vx, vy);
        let w = domain.reflect_velocity(&ReflectionParams::default(), p, v).unwrap();
        prop_assert!((w.norm() - v.norm()).abs() <= 1e-12 * (1.0 + v.norm()));
        let q = domain.query(p).unwrap();
        if q.distance == 0.0 && v.norm() > 0.0 {
            prop_assert!(w.dot(q.normal) <= 1e-12 * v.norm());
        }
    }

    #[test]
    fn projection_lands_in_domain(px in -6.0..8.0f64, py in -3.0..3.0f64) {
        let domain = WalkableDomain::new([-4.0, 6.0], [-1.0, 1.0], vec![Rect::new(-1.0, 1.0, 0.4, 1.0), Rect::new(-1.0, 1.0, -1.0, -0.4)], false).unwrap();
        let q = domain.project(Vec2::new(px, py));
        prop_assert!(domain.contains(q));
    }

    #[test]
    fn scenario_json_round_trip(seed in any::<u64>(), n in 2usize..500, m in 1usize..50, h in prop::sample::select(vec![0.05, 0.1, 0.25])) {
        let mut s = Scenario::preset("example1").unwrap();
        s.seed = seed;
        s.micro.pedestrians = n;
        s.micro.replicates = m;
        s.grid.dx = h;
        s.grid.dy = h;
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }
}
