use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    /// Negative-side slope, in `(0, 1)`.
    LeakyRelu(f64),
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if x > 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative at `x`. The ReLU family uses 0 (resp. the slope) at `x == 0`.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if x > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn activation(kind: Activation, x: &Matrix) -> Matrix {
    x.map(|v| kind.apply(v))
}

/// Elementwise `kind'(pre) * dy`.
pub fn activation_grad(kind: Activation, pre: &Matrix, dy: &Matrix) -> Matrix {
    debug_assert_eq!(pre.shape(), dy.shape());
    if kind == Activation::Identity {
        return dy.clone();
    }
    let mut out = dy.clone();
    for (o, &p) in out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
        *o *= kind.derivative(p);
    }
    out
}
