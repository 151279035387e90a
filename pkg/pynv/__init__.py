from pynv import core, utils, quadrature, rates, observables, stochastic, fitting
