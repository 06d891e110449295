//! Pass rates of every experiment over several seeds at the acceptance sizes.
//! Usage: sweep [trials] [seeds] [experiment]
use lipext::lab::{run_experiment_with_threads, Experiment, ExperimentConfig, PsiBranchChoice};

fn main() {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let only = args.next();
    for e in Experiment::ALL {
        if only.as_deref().is_some_and(|o| o != e.tag()) {
            continue;
        }
        for seed in 0..seeds {
            let branches: &[PsiBranchChoice] = if e == Experiment::PsiLsc {
                &[PsiBranchChoice::Product, PsiBranchChoice::Patched]
            } else {
                &[PsiBranchChoice::Alternate]
            };
            for &psi_branch in branches {
                let config = ExperimentConfig {
                    experiment: e.tag().into(),
                    trials,
                    seed,
                    n: 3,
                    m: 3,
                    x_size: 10,
                    a_size: 5,
                    vary_sizes: true,
                    psi_branch,
                    ..Default::default()
                };
                let r = run_experiment_with_threads(&config, 0).unwrap();
                let s = r.summary();
                println!("{:22} seed={seed} pass_rate={:.4} min_slack={:.3e}", e.tag(), s.pass_rate, s.min_slack);
                for rec in r.records.iter().filter(|r| !r.pass()).take(3) {
                    println!("   trial {} err={:?}", rec.trial, rec.error);
                    for q in rec.quantities.iter().filter(|q| !q.passes()) {
                        println!("      {} = {:e} {:?}", q.name, q.value, q.limit);
                    }
                }
            }
        }
    }
}
