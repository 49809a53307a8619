//! 2D complex FFT plans shared by every grid with the same mode counts.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Scalar;

pub(crate) struct FftPlans<T: Scalar> {
    nx: usize,
    ny: usize,
    x_fwd: Arc<dyn Fft<T>>,
    x_inv: Arc<dyn Fft<T>>,
    y_fwd: Arc<dyn Fft<T>>,
    y_inv: Arc<dyn Fft<T>>,
}

type PlanKey = (TypeId, usize, usize);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl<T: Scalar> FftPlans<T> {
    /// Returns the cached plans for `(nx, ny)`, building them on first use.
    pub(crate) fn cached(nx: usize, ny: usize) -> Arc<Self> {
        let key = (TypeId::of::<T>(), nx, ny);
        let mut cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
        if let Some(entry) = cache.get(&key) {
            if let Ok(plans) = Arc::clone(entry).downcast::<FftPlans<T>>() {
                return plans;
            }
        }
        let plans = Arc::new(Self::build(nx, ny));
        cache.insert(key, plans.clone() as Arc<dyn Any + Send + Sync>);
        plans
    }

    fn build(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::<T>::new();
        FftPlans {
            nx,
            ny,
            x_fwd: planner.plan_fft_forward(nx),
            x_inv: planner.plan_fft_inverse(nx),
            y_fwd: planner.plan_fft_forward(ny),
            y_inv: planner.plan_fft_inverse(ny),
        }
    }

    /// In-place forward transform of a row-major `nx x ny` array.
    pub(crate) fn forward(&self, data: &mut [Complex<T>]) {
        self.run(data, &*self.x_fwd, &*self.y_fwd);
    }

    /// In-place unnormalized inverse transform.
    pub(crate) fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(data, &*self.x_inv, &*self.y_inv);
    }

    fn run(&self, data: &mut [Complex<T>], along_x: &dyn Fft<T>, along_y: &dyn Fft<T>) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(data.len(), nx * ny);
        let zero = Complex::new(T::zero(), T::zero());
        let scratch_len = along_x
            .get_inplace_scratch_len()
            .max(along_y.get_inplace_scratch_len());
        let mut scratch = vec![zero; scratch_len];
        // rows are contiguous along y
        along_y.process_with_scratch(data, &mut scratch);
        let mut columns = vec![zero; nx * ny];
        transpose(data, &mut columns, nx, ny);
        along_x.process_with_scratch(&mut columns, &mut scratch);
        transpose(&columns, data, ny, nx);
    }
}

const BLOCK: usize = 16;

/// Writes the transpose of the row-major `rows x cols` array `src` to `dst`.
fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows: usize, cols: usize) {
    for i0 in (0..rows).step_by(BLOCK) {
        for j0 in (0..cols).step_by(BLOCK) {
            for i in i0..(i0 + BLOCK).min(rows) {
                for j in j0..(j0 + BLOCK).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}
