//! Fixtures shared by the benchmarks.

use batchsched_core::constructive::wmct_wavga;
use batchsched_core::generate::{generate_instance, GenParams};
use batchsched_core::{Instance, Solution};

/// Large-grid instance `m{m}_o{o}_q3_f3_r1` generated from a fixed seed.
pub fn fixture(m: usize, o: usize) -> Instance {
    generate_instance(&GenParams::large(m, o, 3, 3, 1, 0xBE7C))
}

/// Instance together with its constructive solution.
pub fn fixture_with_solution(m: usize, o: usize) -> (Instance, Solution) {
    let inst = fixture(m, o);
    let sol = wmct_wavga(&inst);
    (inst, sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use batchsched_core::check_integrity;

    #[test]
    fn fixtures_are_complete() {
        let (inst, sol) = fixture_with_solution(5, 50);
        assert_eq!(inst.num_operations(), 50);
        assert!(check_integrity(&inst, &sol, true).is_empty());
    }
}
