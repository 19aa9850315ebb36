"""
Series metrics, one module per family. Every registered SeriesMetric
subclass found here becomes a series kind.
"""
