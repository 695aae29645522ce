//! `cargo run --release -p vaest-cli --example ablation -- [seeds] [epochs] [first_seed] [batch] [window] [lr] [loss_kind]`

use std::time::Instant;

use vaest_cli::ablation::{run_seed, AblationSettings};

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() {
    let seeds: u64 = arg(1, 5);
    let mut settings = AblationSettings::default();
    settings.train.epochs = arg(2, settings.train.epochs);
    let first: u64 = arg(3, 0);
    settings.train.batch_windows = arg(4, settings.train.batch_windows);
    settings.model.window_length = arg(5, settings.model.window_length);
    settings.train.learning_rate = arg(6, settings.train.learning_rate);
    if let Some(kind) = std::env::args().nth(7) {
        settings.train.loss_kind = kind.parse().expect("loss kind");
    }
    let mut wins = 0;
    for seed in first..first + seeds {
        let t0 = Instant::now();
        let o = run_seed(&settings, seed).expect("ablation run");
        println!(
            "seed {seed}: rare {:.4} -> {:.4} ({:+.4}), pooled {:.4} -> {:.4} ({:+.4}), best epochs {} / {}, rare frames {:?} [{:.0}s]",
            o.without_lds.rare_mean_ccc,
            o.with_lds.rare_mean_ccc,
            o.rare_delta(),
            o.without_lds.pooled_mean_ccc,
            o.with_lds.pooled_mean_ccc,
            o.pooled_delta(),
            o.without_lds.best_epoch,
            o.with_lds.best_epoch,
            o.rare_frames,
            t0.elapsed().as_secs_f64()
        );
        wins += usize::from(o.rare_delta() > 0.0);
    }
    println!("LDS wins on rare subset: {wins}/{seeds}");
}
