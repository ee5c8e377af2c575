//! Seeded fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stacklab::{GameInstance, Matrix};

/// Random `m × n` game with entries uniform in `[-5, 5)`.
pub fn random_game(m: usize, n: usize, seed: u64) -> GameInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let data = (0..m * n).map(|_| rng.random_range(-5.0..5.0)).collect();
        Matrix::new(m, n, data).expect("dimensions match")
    };
    let a = draw();
    let b = draw();
    GameInstance::new(a, b).expect("finite entries")
}
