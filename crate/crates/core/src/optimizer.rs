//! Stochastic local search.
