"""Seasonal wind and load modelling and bus-voltage violation scanning.

The package turns half-hourly wind records and monthly sector demand into
seasonal normative-day profiles, dispatches a transmission network across
each season's day, and counts bus-voltage violations over many random wind
placements.

Modules
-------
ingest      wind/demand/case file readers
wind        normative-day wind profiles, Weibull fit, turbine curve, outliers
load        seasonal residential/commercial/industrial load profiles
network     network case data model
powerflow   Newton-Raphson AC power flow
dispatch    loss-iterated economic dispatch
scanner     wind placement, scale factors, violation scan, vulnerability ranking
reporting   persistence, plot data, manifest
cli         command-line pipeline
"""

__version__ = "0.1.0"
