use rand::Rng;

/// Uniform random permutation of `0..n` by the Fisher-Yates method.
pub fn fisher_yates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u64> {
    let mut ids: Vec<u64> = (0..n as u64).collect();
    shuffle_in_place(&mut ids, rng);
    ids
}

pub fn shuffle_in_place<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
