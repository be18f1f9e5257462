use palpmap_core::contact::{self, IndentationSchedule, MaterialParams};
use palpmap_core::ekf::{self, EkfConfig, EkfState};
use rand::SeedableRng;
use rand_distr::Distribution;

fn main() {
    let mut cfg = EkfConfig::default();
    cfg.measurement_variance = (5e-6f64).powi(2);
    cfg.q_stiffness = 3e7;
    cfg.q_damping = 10.0;
    let mat = MaterialParams::new(60e3, 3.0, 0.45, 5e-3).unwrap();
    let prior = MaterialParams::new(20e3, 0.0, 0.45, 5e-3).unwrap();
    let mut segments = Vec::new();
    segments.push((1.0, 2e-3));
    for _ in 0..8 {
        segments.push((1.0, 1e-3));
        segments.push((1.0, -1e-3));
    }
    let sched = IndentationSchedule { dt: 1e-3, segments };
    let trace = contact::synth_trace(&mat, &sched, 0.0, 11).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1001);
    let normal = rand_distr::Normal::new(0.0, cfg.measurement_variance.sqrt()).unwrap();
    let mut state = EkfState::initial(&prior);
    let mut window = Vec::new();
    for i in 1..trace.len() {
        state = ekf::predict(&state, trace.force[i - 1], &cfg, 1e-3).unwrap();
        let z = trace.depth[i] + normal.sample(&mut rng);
        let s = state.p[(0, 0)] + cfg.measurement_variance;
        let innovation = z - state.x[0];
        window.push(innovation * innovation / s);
        ekf_step(&mut state, z, &cfg);
        if i % 2000 == 0 {
            let m: f64 = window.iter().sum::<f64>() / window.len() as f64;
            println!("t={:5.1}s  window mean NIS = {m:.4}  k={:.0} lam={:.2} P_dd={:.3e}", trace.time[i], state.x[1], state.x[2], state.p[(0,0)]);
            window.clear();
        }
    }
}
fn ekf_step(state: &mut EkfState, z: f64, cfg: &EkfConfig) {
    *state = ekf::update(state, z, cfg).unwrap();
}
