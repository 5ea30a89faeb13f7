mod common;

use common::*;
use etdm::net::oracle_heads;
use etdm::pipeline::{degrade_sequence, pad_sequence, upsample};
use etdm::refinement::{
    accumulate_backward, accumulate_forward, oracle_direct, Direction, PropagationFifo, SequenceLedger,
};
use etdm::tensor::Tensor3;
use proptest::prelude::*;

fn ledger64(seed: u64, len: usize, shape: (usize, usize, usize)) -> SequenceLedger<f64> {
    let mut g = rng(seed);
    let mut l = SequenceLedger::new();
    let (c, h, w) = shape;
    for _ in 0..len {
        l.push(
            random_tensor(&mut g, c, h, w, 1.0),
            random_tensor(&mut g, c, h, w, 0.3),
            random_tensor(&mut g, c, h, w, 0.3),
        )
        .unwrap();
    }
    l
}

fn cast_ledger(l: &SequenceLedger<f64>) -> SequenceLedger<f32> {
    let c = |v: &[Tensor3<f64>]| v.iter().map(|t| t.cast::<f32>()).collect();
    SequenceLedger {
        s: c(&l.s),
        f: c(&l.f),
        p: c(&l.p),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fifo_f32_tracks_f64_oracle(seed in any::<u64>(), n in 1usize..=3, len in 8usize..=16, c in 1usize..=12, h in 1usize..=8, w in 1usize..=8) {
        let l64 = ledger64(seed, len, (c, h, w));
        let l32 = cast_ledger(&l64);
        // The oracle sees exactly the f32 inputs, widened.
        let widened = SequenceLedger {
            s: l32.s.iter().map(|t| t.cast()).collect(),
            f: l32.f.iter().map(|t| t.cast()).collect(),
            p: l32.p.iter().map(|t| t.cast()).collect(),
        };
        let mut past = PropagationFifo::<f32>::new(Direction::Forth, n, (c, h, w), 0).unwrap();
        for t in 0..len - 1 {
            past.update(&l32.s[t], &l32.f[t]).unwrap();
            for slot in past.slots().iter().filter(|s| s.origin.is_some()) {
                let want = oracle_direct(&widened, slot.origin.unwrap(), t + 1).unwrap();
                prop_assert!(slot.value.cast::<f64>().max_abs_diff(&want).unwrap() <= 1e-5);
            }
        }
    }

    #[test]
    fn direct_forms_match_list_accumulation(seed in any::<u64>(), len in 3usize..10) {
        let l = ledger64(seed, len, (2, 3, 3));
        let last = len - 1;
        let fs: Vec<_> = l.f[..last].iter().collect();
        prop_assert_eq!(oracle_direct(&l, 0, last).unwrap(), accumulate_forward(&l.s[0], &fs).unwrap());
        let ps: Vec<_> = l.p[1..].iter().rev().collect();
        prop_assert_eq!(oracle_direct(&l, last, 0).unwrap(), accumulate_backward(&l.s[last], &ps).unwrap());
    }
}

#[test]
fn ground_truth_residuals_telescope() {
    for seed in 0..4 {
        let hr = random_hr(seed, 7, 32, 32);
        let lr = degrade_sequence(&hr, 4, 1.6).unwrap();
        let up: Vec<_> = lr.iter().map(|f| upsample(f, 4).unwrap()).collect();
        let (hp, upp) = (pad_sequence(&hr).unwrap(), pad_sequence(&up).unwrap());
        let mut ledger = SequenceLedger::<f32>::new();
        for n in 1..=hr.len() {
            let t = oracle_heads(&hp[n - 1], &hp[n], &hp[n + 1], &upp[n - 1], &upp[n], &upp[n + 1], 4).unwrap();
            ledger.push(t.s, t.f, t.p).unwrap();
        }
        for target in 0..ledger.len() {
            for origin in 0..ledger.len() {
                if origin != target && origin.abs_diff(target) <= 3 {
                    let r = oracle_direct(&ledger, origin, target).unwrap();
                    assert!(r.max_abs_diff(&ledger.s[target]).unwrap() < 1e-6, "{origin}->{target}");
                }
            }
        }
    }
}
