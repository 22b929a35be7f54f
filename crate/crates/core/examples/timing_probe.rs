use trendlearner::cluster::{beta_cv_sweep, ksc_cluster};
use trendlearner::series::dist;
use trendlearner::synth::{generate_synthetic, SyntheticConfig};

fn purity(manifest: &trendlearner::dataset::DatasetManifest, assignments: &[usize], k: usize) -> f64 {
    let mut counts = vec![vec![0usize; 4]; k];
    for (obj, a) in manifest.objects.iter().zip(assignments) {
        counts[*a][obj.template_label.unwrap()] += 1;
    }
    let hits: usize = counts.iter().map(|row| *row.iter().max().unwrap()).sum();
    hits as f64 / manifest.objects.len() as f64
}

fn main() {
    for seed in 0..5u64 {
        let cfg = SyntheticConfig { count: 800, noise: 0.1, seed, ..SyntheticConfig::default() };
        let manifest = generate_synthetic(&cfg).unwrap();
        let series: Vec<_> = manifest.objects.iter().map(|o| o.views.clone()).collect();
        let sweep = beta_cv_sweep(&series, 7, seed).unwrap();
        let model4 = &sweep[2].2;
        let p = purity(&manifest, &model4.assignments, 4);
        let curve: Vec<String> = sweep
            .iter()
            .map(|(k, b, _)| match b {
                Some(v) => format!("{k}:{:.3}", v),
                None => format!("{k}:-"),
            })
            .collect();
        // Derive choose_k from the curve with tol 0.1 window 2.
        let vals: Vec<Option<f64>> = sweep.iter().map(|(_, b, _)| *b).collect();
        let mut chosen = None;
        for start in 0..vals.len().saturating_sub(2) {
            if let (Some(a), Some(b), Some(c)) = (vals[start], vals[start + 1], vals[start + 2]) {
                let r1 = ((b - a) / a).abs();
                let r2 = ((c - b) / b).abs();
                if r1 < 0.1 && r2 < 0.1 {
                    chosen = Some(start + 2);
                    break;
                }
            }
        }
        if seed == 0 {
            print!("  k=4 inter dists: ");
            for i in 0..4 {
                for j in (i + 1)..4 {
                    print!("{:.3} ", dist(&model4.centroids[i], &model4.centroids[j]).unwrap().distance);
                }
            }
            println!();
            for t in 0..4 {
                let members: Vec<_> = manifest.objects.iter()
                    .filter(|o| o.template_label == Some(t))
                    .map(|o| o.views.clone()).collect();
                let sub = ksc_cluster(&members, 2, 0).unwrap();
                let d = dist(&sub.centroids[0], &sub.centroids[1]).unwrap().distance;
                print!("t{t}_split={:.3} ", d);
            }
            println!();
        }
        println!("seed {seed}: purity {:.3}, choose_k {:?}, curve [{}]", p, chosen, curve.join(" "));
    }
}
