use molgen_tensor::{kl_diag_gaussian, Tensor, TensorError};
use proptest::prelude::*;

#[test]
fn softmax_worked_values() {
    let s = Tensor::new([2], vec![0.0, 0.0]).unwrap().softmax(0).unwrap();
    assert_eq!(s.data(), &[0.5, 0.5]);
    let s = Tensor::new([2], vec![1000.0, 0.0]).unwrap().softmax(0).unwrap();
    assert_eq!(s.data()[0], 1.0);
    assert!(s.data()[1] >= 0.0 && s.data()[1] < 1e-300);
}

#[test]
fn softmax_rejects_empty_axis() {
    let t = Tensor::new([2, 0], vec![]).unwrap();
    assert!(matches!(t.softmax(1), Err(TensorError::EmptyAxis { .. })));
    assert!(matches!(t.softmax(2), Err(TensorError::InvalidAxis { .. })));
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(rows in 1usize..5, cols in 1usize..7, seed in any::<u64>()) {
        let mut r = molgen_tensor::SeededRng::new(seed);
        let data: Vec<f64> = (0..rows * cols).map(|_| r.uniform(-50.0, 50.0)).collect();
        let s = Tensor::new([rows, cols], data).unwrap().softmax(1).unwrap();
        for row in s.data().chunks(cols) {
            let total: f64 = row.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn softmax_shift_invariant(xs in prop::collection::vec(-20.0f64..20.0, 1..10), c in -100.0f64..100.0) {
        let n = xs.len();
        let a = Tensor::new([n], xs.clone()).unwrap().softmax(0).unwrap();
        let b = Tensor::new([n], xs.iter().map(|x| x + c).collect()).unwrap().softmax(0).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn kl_is_nonnegative(mu in prop::collection::vec(-5.0f64..5.0, 1..12), seed in any::<u64>()) {
        let mut r = molgen_tensor::SeededRng::new(seed);
        let n = mu.len();
        let lv: Vec<f64> = (0..n).map(|_| r.uniform(-6.0, 4.0)).collect();
        let kl = kl_diag_gaussian(&Tensor::new([1, n], mu).unwrap(), &Tensor::new([1, n], lv).unwrap()).unwrap();
        prop_assert!(kl.item() >= 0.0);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact(vals in prop::collection::vec(any::<f64>(), 0..40), name in "[a-z./_0-9]{1,12}") {
        let mut s = molgen_tensor::ParamStore::new();
        s.add(name, [vals.len()], vals).unwrap();
        let bytes = molgen_tensor::checkpoint::checkpoint_bytes(&s);
        let back = molgen_tensor::checkpoint::parse_checkpoint(&bytes).unwrap();
        prop_assert_eq!(molgen_tensor::checkpoint::checkpoint_bytes(&back), bytes);
    }
}
