"""
Color scheme for loss-curve and metric charts.
"""


class ColorScheme:
    # Loss components
    TOTAL = "#1f3b73"           # Dark blue
    RECON = "#2a9d8f"           # Teal
    KL_Z = "#e9c46a"            # Sand
    KL_B = "#f4a261"            # Orange
    TERM_BCE = "#8d6cab"        # Purple
    SUP = "#6c757d"             # Grey
    SMOOTHED_ALPHA = 0.9        # Smoothed curves
    RAW_ALPHA = 0.25            # Raw per-iteration curves

    # Models in metric charts
    MODEL_COLORS = {
        "compile": "#1f3b73",
        "surprisal": "#c44536",
        "vae-bc": "#2a9d8f",
    }
    FALLBACK = "#444444"

    GRID_ALPHA = 0.3

    @classmethod
    def loss_color(cls, column: str) -> str:
        return getattr(cls, column.upper(), cls.FALLBACK)

    @classmethod
    def model_color(cls, model: str) -> str:
        return cls.MODEL_COLORS.get(model, cls.FALLBACK)
