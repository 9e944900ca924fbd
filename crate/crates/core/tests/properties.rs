//! Algebraic invariants over randomized inputs.

use noiser::tensor::{conv2d_forward, instance_norm_forward, l1_loss, relu, tv_loss, Shape, Tensor, IN_EPS};
use noiser::{denormalize, normalize, opposite_color, palette_image, predict_mapping, MappingTarget, Rgb8, RgbImage};
use proptest::prelude::*;

fn tensor(max_c: usize) -> impl Strategy<Value = Tensor<f64>> {
    (1usize..=2, 1..=max_c, 2usize..=6, 2usize..=6).prop_flat_map(|(n, c, h, w)| {
        prop::collection::vec(-3.0f64..3.0, n * c * h * w)
            .prop_map(move |v| Tensor::from_vec(Shape::new(n, c, h, w), v).unwrap())
    })
}

fn saturated() -> impl Strategy<Value = Rgb8> {
    prop::array::uniform3(prop::bool::ANY).prop_map(|b| Rgb8::from_channels(b.map(|on| if on { 255 } else { 0 })))
}

proptest! {
    #[test]
    fn instance_norm_standardizes_each_plane(x in tensor(3)) {
        let c = x.shape().c;
        let (y, _) = instance_norm_forward(&x, &vec![1.0; c], &vec![0.0; c], IN_EPS as f64).unwrap();
        for n in 0..x.shape().n {
            for ch in 0..c {
                let src = x.plane(n, ch);
                let m = src.iter().sum::<f64>() / src.len() as f64;
                let var = src.iter().map(|v| (v - m).powi(2)).sum::<f64>() / src.len() as f64;
                let p = y.plane(n, ch);
                let mean = p.iter().sum::<f64>() / p.len() as f64;
                prop_assert!(mean.abs() < 1e-9);
                if var > 1e-2 {
                    let out_var = p.iter().map(|v| v * v).sum::<f64>() / p.len() as f64;
                    prop_assert!((out_var - var / (var + IN_EPS as f64)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn instance_norm_ignores_per_plane_offset_and_scale(x in tensor(3), shift in -5.0f64..5.0, scale in 0.5f64..4.0) {
        let c = x.shape().c;
        let (g, b) = (vec![1.0; c], vec![0.0; c]);
        let flat_plane = (0..x.shape().n).any(|n| (0..c).any(|ch| {
            let p = x.plane(n, ch);
            let m = p.iter().sum::<f64>() / p.len() as f64;
            p.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (p.len() as f64) < 1e-2
        }));
        prop_assume!(!flat_plane);
        let moved = x.map(|v| v * scale + shift);
        let (y0, _) = instance_norm_forward(&x, &g, &b, 1e-12).unwrap();
        let (y1, _) = instance_norm_forward(&moved, &g, &b, 1e-12).unwrap();
        for (a, b) in y0.data().iter().zip(y1.data()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn conv_is_linear_in_its_input(a in tensor(3), k in -2.0f64..2.0, seed in 0u64..1000) {
        let s = a.shape();
        let w = Tensor::from_fn(Shape::new(2, s.c, 3, 3), |i| ((i as u64 * 2654435761 + seed) % 97) as f64 / 48.5 - 1.0);
        let zero = vec![0.0; 2];
        let lhs = conv2d_forward(&a.map(|v| v * k), &w, &zero).unwrap();
        let rhs = conv2d_forward(&a, &w, &zero).unwrap().map(|v| v * k);
        for (l, r) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((l - r).abs() < 1e-9);
        }
    }

    #[test]
    fn losses_are_nonnegative_and_tv_gradient_sums_to_zero(a in tensor(3)) {
        let b = a.map(|v| v * 0.5 - 0.1);
        prop_assert!(l1_loss(&a, &b).unwrap().0 >= 0.0);
        let (tv, g) = tv_loss(&a).unwrap();
        prop_assert!(tv >= 0.0);
        for n in 0..a.shape().n {
            for c in 0..a.shape().c {
                prop_assert!(g.plane(n, c).iter().sum::<f64>().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn relu_is_idempotent(a in tensor(4)) {
        prop_assert_eq!(relu(&relu(&a)), relu(&a));
    }

    #[test]
    fn normalize_round_trips(raw in prop::collection::vec(any::<u8>(), 3 * 4 * 5)) {
        let img = RgbImage::from_raw(4, 5, &raw).unwrap();
        let t = normalize(&img);
        prop_assert!(t.data().iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert_eq!(denormalize(&t).unwrap(), img);
    }

    #[test]
    fn opposite_is_an_involution(c in any::<[u8; 3]>()) {
        let c = Rgb8::from_channels(c);
        prop_assert_eq!(opposite_color(opposite_color(c)), c);
    }

    #[test]
    fn mapping_is_binary_and_permutation_invariant(train in saturated(), infer in saturated(), perm in 0usize..6) {
        let p = predict_mapping(train, infer).unwrap();
        let expected = match p.target {
            MappingTarget::TrainingColor => train,
            MappingTarget::Opposite => opposite_color(train),
        };
        prop_assert_eq!(p.color, expected);
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let map = |c: Rgb8| { let ch = c.channels(); Rgb8::from_channels(PERMS[perm].map(|i| ch[i])) };
        let q = predict_mapping(map(train), map(infer)).unwrap();
        prop_assert_eq!(q.count, p.count);
        prop_assert_eq!(q.target, p.target);
    }

    #[test]
    fn palette_channel_means_are_equal(rows in 1usize..6, cols in 1usize..6) {
        let t = palette_image(2 * rows, 4 * cols).unwrap();
        let means: Vec<f64> = (0..3).map(|c| t.plane(0, c).iter().map(|&v| v as f64).sum::<f64>()).collect();
        prop_assert!((means[0] - means[1]).abs() < 1e-6 && (means[1] - means[2]).abs() < 1e-6);
    }
}
