use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semno::embed::{cosine, train, TrainConfig};

fn two_topics(n: usize) -> Vec<Vec<String>> {
    let brake: Vec<String> = (0..20).map(|i| format!("brake{i}")).collect();
    let fuel: Vec<String> = (0..20).map(|i| format!("fuel{i}")).collect();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    (0..n)
        .map(|i| {
            let (words, anchor) = if i % 2 == 0 { (&brake, "A_Brakes") } else { (&fuel, "A_Fuel") };
            let mut s: Vec<String> = words.choose_multiple(&mut r, 8).cloned().collect();
            s.insert(3, anchor.to_string());
            s
        })
        .collect()
}

#[test]
fn anchors_sit_with_their_topic() {
    let corpus = two_topics(10_000);
    let refs: Vec<&[String]> = corpus.iter().map(Vec::as_slice).collect();
    let config = TrainConfig {
        dim: 30,
        epochs: 3,
        ..TrainConfig::default()
    };
    let (model, report) = train(&refs, &config, 1).unwrap();
    assert!(report.epoch_losses[0] > *report.epoch_losses.last().unwrap());

    let mean_sim = |a: &str, prefix: &str| {
        let sims: Vec<f64> = (0..20)
            .map(|i| model.similarity(a, &format!("{prefix}{i}")).unwrap().unwrap())
            .collect();
        sims.iter().sum::<f64>() / sims.len() as f64
    };
    assert!(mean_sim("A_Brakes", "brake") > mean_sim("A_Brakes", "fuel"));
    assert!(mean_sim("A_Fuel", "fuel") > mean_sim("A_Fuel", "brake"));

    let intra = mean_sim("brake0", "brake");
    let inter = mean_sim("brake0", "fuel");
    assert!(intra > inter, "intra {intra} inter {inter}");

    for w in &model.words {
        let v = model.vector_of(w).unwrap();
        assert_eq!(v.len(), 30);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(cosine(v, v).unwrap() > 0.999_999);
    }
}
