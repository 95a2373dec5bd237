"""vacdaq: desk-scale remote vacuum measurement over Modbus TCP.

Subpackages: vacphys (formula library), gauge (full-range gauge model),
modbus (codec + transport), emulator (ADAM-style chassis), daq (acquisition
engine + HMI API), cli (command line front end).
"""

__version__ = "0.1.0"
