//! Compare the model's analytic parameter gradients with central finite
//! differences in double precision.
//!
//! ```text
//! cargo run --release --example gradient_check -- [hidden_width] [seed]
//! ```

use noiser::tensor::{l1_loss, tv_loss, Shape, Tensor};
use noiser::SrmParams;

fn loss(p: &SrmParams<f64>, x: &Tensor<f64>) -> (f64, Tensor<f64>) {
    let y = p.infer(x).unwrap();
    let (l1, g1) = l1_loss(&y, x).unwrap();
    let (tv, g2) = tv_loss(&y).unwrap();
    let g = Tensor::from_vec(y.shape(), g1.data().iter().zip(g2.data()).map(|(a, b)| a + b).collect()).unwrap();
    (l1 + tv, g)
}

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let width = args.first().and_then(|s| s.parse().ok()).unwrap_or(4);
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut p: SrmParams<f64> = SrmParams::new(seed, width)?.cast();
    let x = Tensor::from_fn(Shape::new(1, 3, 6, 6), |i| ((i * 7919 % 233) as f64 / 116.5) - 1.0);

    let (_, cache) = p.forward(&x)?;
    let (_, gy) = loss(&p, &x);
    let grads = p.backward(&cache, &gy)?;

    let names = ["conv1.w", "conv1.b", "in1.g", "in1.b", "conv2.w", "conv2.b", "in2.g", "in2.b", "conv3.w", "conv3.b"];
    let h = 1e-6;
    for (b, name) in names.iter().enumerate() {
        let (mut diff, mut norm, mut worst) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..p.buffers()[b].len() {
            let orig = p.buffers()[b][i];
            p.buffers_mut()[b][i] = orig + h;
            let up = loss(&p, &x).0;
            p.buffers_mut()[b][i] = orig - h;
            let down = loss(&p, &x).0;
            p.buffers_mut()[b][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = grads.buffers[b][i];
            worst = worst.max((a - fd).abs());
            diff += (a - fd).powi(2);
            norm += a.powi(2).max(fd.powi(2));
        }
        // Biases feeding an instance norm have zero gradient, so only the
        // absolute error is meaningful for them.
        let rel = (diff / norm.max(1e-30)).sqrt();
        println!("{name:<8} {:>4} values  max abs error {worst:.2e}  relative {rel:.2e}", p.buffers()[b].len());
    }
    Ok(())
}
