#pragma once

#include <qisolve/estimators.hpp>
#include <qisolve/instance.hpp>
#include <qisolve/io.hpp>
#include <qisolve/oracle.hpp>
#include <qisolve/sampled_matrix.hpp>
#include <qisolve/sampled_vector.hpp>
#include <qisolve/solver.hpp>
#include <qisolve/subsample.hpp>
