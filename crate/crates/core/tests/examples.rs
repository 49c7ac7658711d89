macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(closed_form_posterior, "closed_form_posterior.rs", closed_form_posterior_runs);
example!(factor_and_kernels, "factor_and_kernels.rs", factor_and_kernels_runs);
example!(likelihood_cache, "likelihood_cache.rs", likelihood_cache_runs);
example!(sampler_chain, "sampler_chain.rs", sampler_chain_runs);
example!(credible_region, "credible_region.rs", credible_region_runs);
example!(windowed_fit, "windowed_fit.rs", windowed_fit_runs);
example!(simulation_study, "simulation_study.rs", simulation_study_runs);
example!(fit_csv, "fit_csv.rs", fit_csv_runs);
