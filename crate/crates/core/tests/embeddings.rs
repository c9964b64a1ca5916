use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sclom::corpus::{Document, Lang};
use sclom::embeddings::{cosine, train_cbow, CbowConfig};

/// Two context families `a*` and `b*`. `p` and `q` fill the same slot in
/// family-a sentences, chosen uniformly; `r` only appears in family a and
/// `s` only in family b.
fn corpus(seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..600)
        .map(|i| {
            let family_a = i % 2 == 0;
            let prefix = if family_a { "a" } else { "b" };
            let mut tokens = Vec::new();
            for _ in 0..4 {
                for _ in 0..4 {
                    tokens.push(format!("{prefix}{}", rng.random_range(0..20)));
                }
                let slot = if family_a {
                    if rng.random_bool(0.5) {
                        "p"
                    } else {
                        "q"
                    }
                } else {
                    "filler"
                };
                tokens.push(slot.to_string());
                for _ in 0..4 {
                    tokens.push(format!("{prefix}{}", rng.random_range(0..20)));
                }
                tokens.push(if family_a { "r" } else { "s" }.to_string());
            }
            Document {
                id: format!("d{i}"),
                lang: Lang::Source,
                tokens,
                label: None,
            }
        })
        .collect()
}

fn config() -> CbowConfig {
    CbowConfig {
        dim: 30,
        epochs: 10,
        ..Default::default()
    }
}

#[test]
fn interchangeable_tokens_get_similar_vectors() {
    let table = train_cbow(&corpus(3), &config()).unwrap();
    let v = |w: &str| table.vector(w).unwrap();
    let pq = cosine(v("p"), v("q")).unwrap();
    let rs = cosine(v("r"), v("s")).unwrap();
    assert!(pq > 0.6, "cos(p, q) = {pq}");
    assert!(rs < pq, "cos(r, s) = {rs} not below cos(p, q) = {pq}");
}

#[test]
fn single_threaded_training_is_bit_reproducible() {
    let docs = corpus(4);
    let a = train_cbow(&docs, &config()).unwrap();
    let b = train_cbow(&docs, &config()).unwrap();
    assert_eq!(a.words(), b.words());
    assert!(a.matrix().iter().zip(b.matrix()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.matrix().iter().all(|x| x.is_finite()));

    let c = train_cbow(&docs, &CbowConfig { seed: 2, ..config() }).unwrap();
    assert_ne!(a.matrix(), c.matrix());
}
