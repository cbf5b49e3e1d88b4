"""Static chart rendering for sweep CSV tables."""

from sweepplot.render import (
    PlotError,
    PlotSpec,
    build_figure,
    load_rows,
    main,
    render_sweep,
)
