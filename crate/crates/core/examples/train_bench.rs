use chaosae_core::datapipe::prepare_datasets;
use chaosae_core::dynamics::{integrate, IntegrationConfig, SystemSpec};
use chaosae_core::nn::{train_with_progress, Architecture, AutoencoderModel, TrainConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(3);
    let alpha: f64 = args.next().map(|s| s.parse().unwrap()).unwrap_or(1e-5);
    let system = args.next().unwrap_or_else(|| "rossler".into());
    let spec = match system.as_str() {
        "lorenz63" => SystemSpec::lorenz63(),
        "lorenz96" => SystemSpec::lorenz96(),
        _ => SystemSpec::rossler(),
    };
    let coord = if system == "lorenz96" { 18 } else { 0 };
    let cfg = IntegrationConfig { total_steps: 100_000, transient_steps: 50_000, ..Default::default() };
    let traj = integrate(&spec, &cfg).unwrap();
    let x = traj.coordinate(coord).unwrap();
    let (tr, te) = prepare_datasets(&x, 30, 1, 0.8, 0).unwrap();
    let model = AutoencoderModel::new(&Architecture::scaled(30), tr.norm, 0).unwrap();
    let tc = TrainConfig { epochs, alpha, ..Default::default() };
    let t0 = std::time::Instant::now();
    let (m, _r) = train_with_progress(model, &tr, &te, &tc, |r| {
        if r.epoch % 25 == 0 || r.epoch < 3 {
            println!(
                "{} {:.1}s train={:.3e} test_mse={:.3e}",
                r.epoch,
                t0.elapsed().as_secs_f64(),
                r.train_loss,
                r.test_mse
            )
        }
    })
    .unwrap();
    let st = chaosae_core::latent::latent_stats(&m, &te, alpha).unwrap();
    println!("{st:?}");
}
