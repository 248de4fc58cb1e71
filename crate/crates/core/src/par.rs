//! Thin switch between rayon and sequential iteration.
//!
//! Cell loops are embarrassingly parallel: each cell writes only its
//! own chunk of the output slice. With the `parallel` feature disabled
//! the same kernels run sequentially, which is what the benches compare.

#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(idx, c)| f(idx, c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk<F>(out: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    out.chunks_mut(chunk).enumerate().for_each(|(idx, c)| f(idx, c));
}
