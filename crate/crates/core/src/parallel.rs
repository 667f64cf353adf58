//! Conditional parallel iteration.
//!
//! With the `parallel` feature (default) this re-exports rayon's traits;
//! without it, serial shims with the same surface are provided so the rest
//! of the crate is written once against `par_iter`/`into_par_iter`.
//!
//! Callers only ever parallelize over disjoint outputs (grid rows, trials,
//! Fourier modes); no floating-point reduction crosses a thread boundary,
//! so results are bit-identical with and without the feature.

#[cfg(feature = "parallel")]
pub use rayon::prelude::{
    IndexedParallelIterator, IntoParallelIterator, IntoParallelRefMutIterator, ParallelIterator,
};

#[cfg(not(feature = "parallel"))]
pub use self::fallback::*;

#[cfg(not(feature = "parallel"))]
mod fallback {
    pub use std::iter::Iterator as ParallelIterator;

    pub trait IntoParallelIterator {
        type Item;
        type Iter: Iterator<Item = Self::Item>;
        fn into_par_iter(self) -> Self::Iter;
    }

    impl<I: IntoIterator> IntoParallelIterator for I {
        type Item = I::Item;
        type Iter = I::IntoIter;
        fn into_par_iter(self) -> Self::Iter {
            self.into_iter()
        }
    }

    pub trait IntoParallelRefMutIterator<'data> {
        type Item;
        type Iter: Iterator<Item = Self::Item>;
        fn par_iter_mut(&'data mut self) -> Self::Iter;
    }

    impl<'data, I: 'data + ?Sized> IntoParallelRefMutIterator<'data> for I
    where
        &'data mut I: IntoIterator,
    {
        type Item = <&'data mut I as IntoIterator>::Item;
        type Iter = <&'data mut I as IntoIterator>::IntoIter;
        fn par_iter_mut(&'data mut self) -> Self::Iter {
            self.into_iter()
        }
    }
}

/// `slice.par_chunks_mut(size)` that degrades to `chunks_mut` serially.
#[cfg(feature = "parallel")]
pub fn chunks_mut<T: Send>(
    slice: &mut [T],
    size: usize,
) -> rayon::slice::ChunksMut<'_, T> {
    use rayon::slice::ParallelSliceMut;
    slice.par_chunks_mut(size)
}

#[cfg(not(feature = "parallel"))]
pub fn chunks_mut<T>(slice: &mut [T], size: usize) -> std::slice::ChunksMut<'_, T> {
    slice.chunks_mut(size)
}
