from interleave.plotting._plotting import plot_alpha, plot_sweep, gnuplot_script
