"""Experiment harness: `unida generate | observe | train | assimilate | forecast | evaluate`."""
