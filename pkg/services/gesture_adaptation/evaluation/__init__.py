"""Classification metrics and multi-seed aggregation."""
