//! Dormand–Prince 5(4) with elementary step-size control for small fixed-size systems.

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

/// Adaptive integrator state for `y' = f(t, y)`.
pub struct Dopri<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> {
    f: F,
    tol: Tolerances,
    pub t: f64,
    pub y: [f64; N],
    h: f64,
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> Dopri<N, F> {
    pub fn new(f: F, t0: f64, y0: [f64; N], h0: f64, tol: Tolerances) -> Self {
        Self {
            f,
            tol,
            t: t0,
            y: y0,
            h: h0,
        }
    }

    fn attempt(&self, h: f64) -> ([f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        k[0] = (self.f)(self.t, &self.y);
        for s in 1..7 {
            let mut ys = self.y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.f)(self.t + C[s] * h, &ys);
        }
        let mut y5 = self.y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B[s] * k[s][i];
                lo += B_LOW[s] * k[s][i];
            }
            y5[i] += h * hi;
            let scale = self.tol.atol + self.tol.rtol * self.y[i].abs().max(y5[i].abs());
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        (y5, err)
    }

    /// One accepted step no longer than `h_max`; returns the step taken.
    pub fn step(&mut self, h_max: f64) -> f64 {
        let clipped = h_max < self.h;
        let mut h = self.h.min(h_max);
        loop {
            let (y, err) = self.attempt(h);
            if err <= 1.0 || h < 1e-14 {
                self.t += h;
                self.y = y;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a step shortened only to land on h_max says nothing about the next one
                if !(clipped && err <= 1.0 && h == h_max) {
                    self.h = h * grow;
                }
                return h;
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    /// Integrates exactly to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) {
        while self.t < t_end {
            let remaining = t_end - self.t;
            if remaining <= 1e-15 * t_end.abs().max(1.0) {
                self.t = t_end;
                break;
            }
            self.step(remaining);
        }
    }
}
