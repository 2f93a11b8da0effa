"""pairviz: gesture-driven collaborative visualization.

Two participants manipulate one shared, replicated visualization scene via
bimanual mid-air hand gestures recognized from 21-point hand-landmark
streams. The package provides the landmark data model, a deterministic
geometric gesture recognizer, the scene document and its gesture-to-write
mapping, a last-writer-wins replicated document, a websocket session relay,
and a deterministic replay harness.
"""

__version__ = "0.1.0"
